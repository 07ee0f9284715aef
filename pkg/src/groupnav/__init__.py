"""Group-aware crowd navigation simulator and benchmark harness."""

from groupnav.geom import DegenerateTangent, Disk, Vec2

__version__ = "0.1.0"

__all__ = ["DegenerateTangent", "Disk", "Vec2", "__version__"]

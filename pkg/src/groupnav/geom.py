"""
Planar geometry primitives: vectors, disks, tangent points and segment tests.

Everything here is a pure value-level function. Rotations are done with
explicit cos/sin pairs derived from distance ratios, never via atan2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

EPS_GEOM = 1e-9


class DegenerateTangent(ValueError):
    """Raised when a tangent is requested from a point on or inside a disk."""


class Vec2:
    """Immutable 2D vector (meters for positions, m/s for velocities)."""

    __slots__ = ("x", "y")

    def __init__(self, x: float, y: float):
        x = float(x)
        y = float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite vector component: ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __setattr__(self, name, value):
        raise AttributeError("Vec2 is immutable")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vec2):
            return NotImplemented
        return self.x == other.x and self.y == other.y

    def __hash__(self) -> int:
        return hash((self.x, self.y))

    def __repr__(self) -> str:
        return f"Vec2({self.x!r}, {self.y!r})"

    def __reduce__(self):
        return (Vec2, (self.x, self.y))

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> Vec2:
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> Vec2:
        return Vec2(self.x / s, self.y / s)

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        """z-component of the 3D cross product (a.k.a. 2D determinant)."""
        return self.x * other.y - self.y * other.x

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> Vec2:
        """Left-hand (counterclockwise) perpendicular."""
        return Vec2(-self.y, self.x)

    def rotated(self, cos_a: float, sin_a: float) -> Vec2:
        return Vec2(self.x * cos_a - self.y * sin_a, self.x * sin_a + self.y * cos_a)

    def clamped(self, max_norm: float) -> Vec2:
        """Scale down to ``max_norm`` if longer; otherwise return unchanged."""
        n_sq = self.norm_sq()
        if n_sq <= max_norm * max_norm:
            return self
        return self * (max_norm / math.sqrt(n_sq))

    def as_list(self) -> list[float]:
        return [self.x, self.y]


ZERO = Vec2(0.0, 0.0)


@dataclass(frozen=True)
class Disk:
    center: Vec2
    radius: float

    def __post_init__(self):
        if not (self.radius >= 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"disk radius must be finite and >= 0, got {self.radius}")

    def inflated(self, margin: float) -> Disk:
        return Disk(self.center, self.radius + margin)

    def contains(self, p: Vec2) -> bool:
        """Strict interior test, used for the group-intrusion indicator."""
        return (p - self.center).norm() < self.radius


def tangent_points(p: Vec2, disk: Disk) -> tuple[Vec2, Vec2]:
    """
    Points where the two lines through ``p`` touch ``disk``.

    The first point is the counterclockwise one: the unit vector from the
    center toward ``p`` rotated by +beta, where cos(beta) = r / d.

    Raises:
        DegenerateTangent: if ``p`` is on or inside the disk.
    """
    offset = p - disk.center
    d = offset.norm()
    if d <= disk.radius + EPS_GEOM:
        raise DegenerateTangent(
            f"point at distance {d:.6g} is not outside disk of radius {disk.radius:.6g}"
        )
    cos_b = disk.radius / d
    sin_b = math.sqrt(max(0.0, 1.0 - cos_b * cos_b))
    u = offset / d
    ccw = disk.center + u.rotated(cos_b, sin_b) * disk.radius
    cw = disk.center + u.rotated(cos_b, -sin_b) * disk.radius
    return ccw, cw


def closest_point_on_segment(a: Vec2, b: Vec2, q: Vec2) -> Vec2:
    ab = b - a
    len_sq = ab.norm_sq()
    if len_sq == 0.0:
        return a
    t = (q - a).dot(ab) / len_sq
    t = min(1.0, max(0.0, t))
    return a + ab * t


def segment_disk_intersects(a: Vec2, b: Vec2, disk: Disk) -> bool:
    """True iff the closed segment [a, b] comes within ``disk.radius`` of the center."""
    closest = closest_point_on_segment(a, b, disk.center)
    return (closest - disk.center).norm() <= disk.radius


def select_tangent(p_r: Vec2, group: Disk, inflate: float, goal: Vec2) -> Vec2:
    """
    Pick the tangent point of the inflated disk that best heads toward ``goal``.

    Candidates are compared by the dot product between the unit direction to
    the candidate and the unit direction to the goal; an exact tie goes to the
    counterclockwise candidate.
    """
    ccw, cw = tangent_points(p_r, group.inflated(inflate))
    to_goal = (goal - p_r).unit()
    score_ccw = (ccw - p_r).unit().dot(to_goal)
    score_cw = (cw - p_r).unit().dot(to_goal)
    return cw if score_cw > score_ccw else ccw

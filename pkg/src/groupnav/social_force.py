"""
Social Force navigation (Helbing-style, unit mass).

The agent is pulled toward its goal by a relaxation term and pushed away
from every neighbor by an exponentially decaying repulsion. The force is
integrated once per step into a velocity command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from groupnav.agents import AgentState
from groupnav.geom import Vec2

COINCIDENT_EPS = 1e-9


class CoincidentAgents(ValueError):
    """Raised when two agent centers coincide and the repulsion direction is undefined."""


@dataclass(frozen=True)
class SFParams:
    relax_time: float = 0.5
    A: float = 2.0
    B: float = 0.3
    max_force: float = 10.0

    def __post_init__(self):
        for name in ("relax_time", "A", "B", "max_force"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"SFParams.{name} must be finite and > 0, got {value}")


def repulsion(d: float, combined_radius: float, params: SFParams) -> float:
    """Magnitude of the pairwise repulsion at center distance ``d``."""
    return params.A * math.exp((combined_radius - d) / params.B)


def sf_force(self: AgentState, neighbors: Sequence[AgentState], goal: Vec2, params: SFParams) -> Vec2:
    direction = (goal - self.position).unit()
    fx = (self.pref_speed * direction.x - self.velocity.x) / params.relax_time
    fy = (self.pref_speed * direction.y - self.velocity.y) / params.relax_time
    px, py = self.position.x, self.position.y
    for other in neighbors:
        if other.id == self.id:
            continue
        dx = px - other.position.x
        dy = py - other.position.y
        d = math.hypot(dx, dy)
        if d < COINCIDENT_EPS:
            raise CoincidentAgents(f"agents {self.id} and {other.id} share a position")
        mag = repulsion(d, self.radius + other.radius, params)
        fx += mag * dx / d
        fy += mag * dy / d
    return Vec2(fx, fy).clamped(params.max_force)


def sf_velocity(
    self: AgentState,
    neighbors: Sequence[AgentState],
    goal: Vec2,
    params: SFParams,
    dt: float,
    v_max: float,
) -> Vec2:
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    force = sf_force(self, neighbors, goal, params)
    return (self.velocity + force * dt).clamped(v_max)

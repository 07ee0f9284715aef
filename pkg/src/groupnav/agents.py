"""Agent-level state shared by the simulator and the navigation policies."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from groupnav.geom import Vec2

SPEED_TOL = 1e-9


class Role(str, enum.Enum):
    INDIVIDUAL = "Individual"
    GROUP_LEADER = "GroupLeader"
    GROUP_FOLLOWER = "GroupFollower"
    STATIC_GROUP_MEMBER = "StaticGroupMember"
    ROBOT = "Robot"


@dataclass(frozen=True)
class AgentState:
    id: int
    position: Vec2
    velocity: Vec2
    radius: float
    goal: Vec2
    pref_speed: float
    role: Role = Role.INDIVIDUAL

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"agent {self.id}: radius must be > 0")
        if self.velocity.norm() > self.pref_speed + SPEED_TOL:
            raise ValueError(
                f"agent {self.id}: speed {self.velocity.norm():.6g} exceeds pref_speed {self.pref_speed}"
            )

    def moved(self, position: Vec2, velocity: Vec2) -> AgentState:
        return replace(self, position=position, velocity=velocity)

    def with_goal(self, goal: Vec2) -> AgentState:
        return replace(self, goal=goal)

"""
Tangent Action for Group Avoidance (TAGA).

A reactive wrapper around any base navigation policy. Each step it clusters
the visible humans into groups (proximity plus velocity coherence), and if
the nearest group blocks the straight path to the goal it steers the robot
at full speed toward a tangent point of the group's disk inflated by a
safety margin. Otherwise the base policy acts unchanged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from groupnav.agents import AgentState
from groupnav.geom import DegenerateTangent, Disk, Vec2, segment_disk_intersects, select_tangent
from groupnav.sim import WorldObservation, group_centroid_radius

Policy = Callable[[WorldObservation], Vec2]


class TagaMode(str, enum.Enum):
    INACTIVE = "Inactive"
    AVOIDING = "Avoiding"


@dataclass(frozen=True)
class DetectedGroup:
    centroid: Vec2
    radius: float
    member_ids: tuple[int, ...]
    mean_velocity: Vec2

    @property
    def disk(self) -> Disk:
        return Disk(self.centroid, self.radius)


@dataclass(frozen=True)
class TagaConfig:
    d_safe: float = 0.7
    cluster_eps: float = 1.0
    velocity_tol: float = 0.5
    min_group_size: int = 2
    detection_range: float = 5.0

    def __post_init__(self):
        for name in ("d_safe", "cluster_eps", "velocity_tol", "detection_range"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"TagaConfig.{name} must be a finite positive number, got {value!r}")
        if not isinstance(self.min_group_size, int) or self.min_group_size < 2:
            raise ValueError("TagaConfig.min_group_size must be an integer >= 2")


@dataclass
class TagaState:
    active_group: DetectedGroup | None = None

    @property
    def mode(self) -> TagaMode:
        return TagaMode.AVOIDING if self.active_group is not None else TagaMode.INACTIVE


def _components(humans: Sequence[AgentState], cfg: TagaConfig) -> list[list[int]]:
    n = len(humans)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    eps_sq = cfg.cluster_eps ** 2
    tol_sq = cfg.velocity_tol ** 2
    for i in range(n):
        pi, vi = humans[i].position, humans[i].velocity
        for j in range(i + 1, n):
            pj, vj = humans[j].position, humans[j].velocity
            if (pi.x - pj.x) ** 2 + (pi.y - pj.y) ** 2 > eps_sq:
                continue
            if (vi.x - vj.x) ** 2 + (vi.y - vj.y) ** 2 > tol_sq:
                continue
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    comps: dict[int, list[int]] = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return list(comps.values())


def detect_groups(obs: WorldObservation, cfg: TagaConfig) -> list[DetectedGroup]:
    """
    Single-linkage clustering of the visible humans.

    Two humans are linked when both their distance and their velocity
    difference are within tolerance; linked components of at least
    ``min_group_size`` become groups, nearest centroid first.
    """
    humans = sorted(obs.visible_humans, key=lambda h: h.id)
    groups = []
    for comp in _components(humans, cfg):
        if len(comp) < cfg.min_group_size:
            continue
        members = [humans[i] for i in comp]
        centroid, radius = group_centroid_radius([m.position for m in members])
        n = len(members)
        mean_v = Vec2(math.fsum(m.velocity.x for m in members) / n, math.fsum(m.velocity.y for m in members) / n)
        groups.append(DetectedGroup(centroid, radius, tuple(m.id for m in members), mean_v))
    p = obs.robot.position
    groups.sort(key=lambda g: ((g.centroid - p).norm(), g.member_ids))
    return groups


def taga_active(robot: AgentState, goal: Vec2, groups: Sequence[DetectedGroup], cfg: TagaConfig) -> DetectedGroup | None:
    """Nearest group in range that blocks the robot-to-goal segment while the robot is still outside it."""
    p = robot.position
    for g in sorted(groups, key=lambda g: ((g.centroid - p).norm(), g.member_ids)):
        dist = (g.centroid - p).norm()
        if dist > cfg.detection_range:
            continue
        inflated = g.disk.inflated(cfg.d_safe)
        if dist <= inflated.radius:
            continue
        if segment_disk_intersects(p, goal, inflated):
            return g
    return None


def taga_action(robot: AgentState, group: DetectedGroup, goal: Vec2, cfg: TagaConfig, v_max: float) -> Vec2:
    """
    Full-speed velocity toward the chosen tangent point of the inflated group disk.

    Raises:
        DegenerateTangent: if the robot is inside the inflated disk.
    """
    target = select_tangent(robot.position, group.disk, cfg.d_safe, goal)
    heading = target - robot.position
    return heading * (v_max / heading.norm())


class TagaPolicy:
    """
    Base policy with TAGA switching on top.

    Holds the per-episode :class:`TagaState`; call :meth:`reset` between
    episodes.
    """

    def __init__(self, base: Policy, cfg: TagaConfig | None = None):
        self.base = base
        self.cfg = cfg or TagaConfig()
        self.state = TagaState()

    @property
    def mode(self) -> TagaMode:
        return self.state.mode

    def reset(self) -> None:
        self.state = TagaState()
        if hasattr(self.base, "reset"):
            self.base.reset()

    def __call__(self, obs: WorldObservation) -> Vec2:
        groups = detect_groups(obs, self.cfg)
        group = taga_active(obs.robot, obs.goal, groups, self.cfg) if groups else None
        if group is not None:
            try:
                action = taga_action(obs.robot, group, obs.goal, self.cfg, obs.robot.pref_speed)
            except DegenerateTangent:
                group = None
        self.state = TagaState(group)
        if group is None:
            return self.base(obs)
        return action


def wrap_policy(base: Policy, cfg: TagaConfig | None = None) -> TagaPolicy:
    return TagaPolicy(base, cfg)

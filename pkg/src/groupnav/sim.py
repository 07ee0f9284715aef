"""
Crowd world: scenario generation, human and group dynamics, robot stepping,
sensing and episode termination.

Humans never see the robot. Individuals and dynamic-group leaders walk with
ORCA among themselves; followers stick to their group through the cohesion
rule ``v = v_leader + k (centroid - p)``; static group members stand still.
Because the crowd ignores the robot, the crowd's evolution can be computed
once per seed and replayed for any robot policy (see :class:`CrowdRollout`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Sequence

import numpy as np

from groupnav.agents import AgentState, Role
from groupnav.geom import Vec2
from groupnav.orca import TAU, _orca_line, preferred_velocity, solve_lines

PLACEMENT_MARGIN = 0.1
MAX_PLACEMENT_ATTEMPTS = 10_000
ROBOT_ID = 0


class InvalidConfig(ValueError):
    pass


class PlacementFailure(RuntimeError):
    def __init__(self, message: str, seed: int | None = None):
        super().__init__(message)
        self.seed = seed


class EmptyGroup(ValueError):
    pass


class GroupKind(str, enum.Enum):
    STATIC = "Static"
    DYNAMIC = "Dynamic"


class OutcomeKind(str, enum.Enum):
    SUCCESS = "Success"
    COLLISION = "Collision"
    GROUP_COLLISION = "GroupCollision"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class ScenarioConfig:
    arena_half_extent: float = 6.0
    n_individuals: int = 11
    n_groups: int = 3
    group_size_range: tuple[int, int] = (3, 4)
    static_group_fraction: float = 0.5
    dt: float = 0.25
    max_steps: int = 197
    sensor_range: float = 5.0
    human_radius: float = 0.3
    robot_radius: float = 0.3
    pref_speed: float = 1.0
    cohesion_k: float = 1.0
    d_safe: float = 0.7
    goal_radius: float = 0.3
    terminate_on_group_intrusion: bool = True
    seed: int = 0
    # crowd size cap: individuals are trimmed so the total never exceeds it
    max_humans: int = 20
    group_spawn_radius: float = 0.8
    # minimum distance between members of different groups at spawn
    group_clearance: float = 1.0
    orca_tau: float = TAU
    orca_neighbor_dist: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "group_size_range", tuple(int(v) for v in self.group_size_range))
        self.validate()

    def validate(self) -> None:
        positive = (
            "arena_half_extent", "dt", "sensor_range", "human_radius", "robot_radius",
            "pref_speed", "d_safe", "goal_radius", "group_spawn_radius", "orca_tau",
            "orca_neighbor_dist",
        )
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfig(f"{name} must be a finite positive number, got {value!r}")
        for name in ("n_individuals", "n_groups", "max_steps", "max_humans"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise InvalidConfig(f"{name} must be a non-negative integer, got {value!r}")
        if self.max_steps < 1:
            raise InvalidConfig("max_steps must be >= 1")
        lo, hi = self.group_size_range
        if lo < 2 or hi < lo:
            raise InvalidConfig(f"group_size_range must satisfy 2 <= min <= max, got {self.group_size_range}")
        if not 0.0 <= self.static_group_fraction <= 1.0:
            raise InvalidConfig("static_group_fraction must be a probability")
        if self.cohesion_k < 0:
            raise InvalidConfig("cohesion_k must be >= 0")
        if self.group_clearance < 0:
            raise InvalidConfig("group_clearance must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["group_size_range"] = list(self.group_size_range)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def robot_start(self) -> Vec2:
        return Vec2(0.0, -0.75 * self.arena_half_extent)

    @property
    def robot_goal(self) -> Vec2:
        return Vec2(0.0, 0.75 * self.arena_half_extent)


@dataclass(frozen=True)
class GroupState:
    group_id: int
    centroid: Vec2
    radius: float
    member_ids: tuple[int, ...]
    kind: GroupKind
    leader_id: int | None = None

    def __post_init__(self):
        if len(self.member_ids) < 2:
            raise ValueError("a group needs at least two members")
        if self.kind is GroupKind.DYNAMIC and self.leader_id not in self.member_ids:
            raise ValueError("dynamic group leader must be a member")

    @property
    def member_count(self) -> int:
        return len(self.member_ids)

    def contains(self, p: Vec2) -> bool:
        return (p - self.centroid).norm() < self.radius


@dataclass(frozen=True)
class WorldState:
    time_step: int
    robot: AgentState
    humans: tuple[AgentState, ...]
    groups: tuple[GroupState, ...]
    rng_state: dict = field(repr=False)

    def human(self, agent_id: int) -> AgentState:
        for h in self.humans:
            if h.id == agent_id:
                return h
        raise KeyError(agent_id)


@dataclass(frozen=True)
class WorldObservation:
    robot: AgentState
    visible_humans: tuple[AgentState, ...]
    goal: Vec2


@dataclass(frozen=True)
class EpisodeOutcome:
    kind: OutcomeKind
    terminal_step: int


@dataclass(frozen=True)
class CrowdFrame:
    """Crowd part of a world state: everything the robot cannot influence."""

    humans: tuple[AgentState, ...]
    groups: tuple[GroupState, ...]
    rng_state: dict


def group_centroid_radius(member_positions: Sequence[Vec2]) -> tuple[Vec2, float]:
    """Mean member position and the largest member distance from it."""
    if not member_positions:
        raise EmptyGroup("cannot summarize an empty group")
    n = len(member_positions)
    cx = math.fsum(p.x for p in member_positions) / n
    cy = math.fsum(p.y for p in member_positions) / n
    c = Vec2(cx, cy)
    return c, max((p - c).norm() for p in member_positions)


def follower_velocity(v_leader: Vec2, centroid: Vec2, p_i: Vec2, k: float) -> Vec2:
    """Cohesion rule for a follower; the caller clamps to the follower's speed limit."""
    if k < 0:
        raise ValueError("cohesion factor must be >= 0")
    return Vec2(v_leader.x + k * (centroid.x - p_i.x), v_leader.y + k * (centroid.y - p_i.y))


def _rng(state: dict) -> np.random.Generator:
    bit_gen = np.random.PCG64()
    bit_gen.state = state
    return np.random.Generator(bit_gen)


def _sample_point(rng: np.random.Generator, half: float) -> Vec2:
    x, y = rng.uniform(-half, half, size=2)
    return Vec2(x, y)


def _regroup(groups: Sequence[GroupState], by_id: dict[int, AgentState]) -> tuple[GroupState, ...]:
    out = []
    for g in groups:
        c, r = group_centroid_radius([by_id[i].position for i in g.member_ids])
        out.append(replace(g, centroid=c, radius=r))
    return tuple(out)


def generate_scenario(config: ScenarioConfig, seed: int) -> WorldState:
    """
    Random but reproducible initial world for ``seed``.

    Groups are placed first (members scattered in a small disk around a
    random center), then individuals. Every placement is rejection-sampled
    against overlap with all previously placed agents and against group
    disks it does not belong to.

    Raises:
        PlacementFailure: after 10,000 rejected draws in total.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    r_h = config.human_radius
    half = config.arena_half_extent - r_h
    min_gap = 2 * r_h + PLACEMENT_MARGIN
    body_gap = config.robot_radius + r_h + PLACEMENT_MARGIN
    attempts = 0

    def spend() -> None:
        nonlocal attempts
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS:
            raise PlacementFailure(
                f"could not place agents after {MAX_PLACEMENT_ATTEMPTS} attempts (seed {seed})", seed
            )

    start, robot_goal = config.robot_start, config.robot_goal
    robot = AgentState(
        ROBOT_ID, start, Vec2(0.0, 0.0), config.robot_radius, robot_goal, config.pref_speed, Role.ROBOT
    )
    placed: list[tuple[Vec2, float]] = [(start, config.robot_radius)]
    disks: list[tuple[Vec2, float]] = []
    group_members: list[list[Vec2]] = []

    def clear_of_placed(p: Vec2) -> bool:
        return all((p - q).norm() >= r_h + rq + PLACEMENT_MARGIN for q, rq in placed)

    def outside_disks(p: Vec2) -> bool:
        return all((p - c).norm() >= rg for c, rg in disks)

    n_sizes = config.group_size_range[1] - config.group_size_range[0] + 1
    groups_spec = []
    for g in range(config.n_groups):
        size = config.group_size_range[0] + int(rng.integers(n_sizes))
        static = bool(rng.random() < config.static_group_fraction)
        spawn_half = half - config.group_spawn_radius
        while True:
            spend()
            center = _sample_point(rng, spawn_half)
            members: list[Vec2] = []
            while len(members) < size:
                spend()
                ang = rng.uniform(0.0, 2 * math.pi)
                rad = config.group_spawn_radius * math.sqrt(rng.random())
                p = center + Vec2(math.cos(ang), math.sin(ang)) * rad
                if all((p - q).norm() >= min_gap for q in members):
                    members.append(p)
            c, r = group_centroid_radius(members)
            if not all(clear_of_placed(p) and outside_disks(p) for p in members):
                continue
            if any((q - c).norm() < r for q, _ in placed):
                continue
            if any((p - q).norm() < config.group_clearance for other in group_members for p in members for q in other):
                continue
            if (start - c).norm() < r + body_gap:
                continue
            if static and (robot_goal - c).norm() < r + body_gap + config.goal_radius:
                continue
            break
        placed.extend((p, r_h) for p in members)
        disks.append((c, r))
        group_members.append(members)
        leader_idx = None if static else int(rng.integers(size))
        goal = None if static else _sample_point(rng, half)
        groups_spec.append((members, static, leader_idx, goal))

    n_members = sum(len(m) for m in group_members)
    n_individuals = max(0, min(config.n_individuals, config.max_humans - n_members))
    individuals = []
    for _ in range(n_individuals):
        while True:
            spend()
            p = _sample_point(rng, half)
            if clear_of_placed(p) and outside_disks(p):
                break
        placed.append((p, r_h))
        individuals.append((p, _sample_point(rng, half)))

    humans: list[AgentState] = []
    groups: list[GroupState] = []
    next_id = ROBOT_ID + 1
    for gid, (members, static, leader_idx, goal) in enumerate(groups_spec):
        ids = tuple(range(next_id, next_id + len(members)))
        next_id += len(members)
        c, r = group_centroid_radius(members)
        if static:
            for i, p in zip(ids, members):
                humans.append(AgentState(i, p, Vec2(0.0, 0.0), r_h, p, config.pref_speed, Role.STATIC_GROUP_MEMBER))
            groups.append(GroupState(gid, c, r, ids, GroupKind.STATIC))
            continue
        leader_pos = members[leader_idx]
        v_leader = preferred_velocity(leader_pos, goal, config.pref_speed)
        for idx, (i, p) in enumerate(zip(ids, members)):
            if idx == leader_idx:
                humans.append(AgentState(i, p, v_leader, r_h, goal, config.pref_speed, Role.GROUP_LEADER))
            else:
                v = follower_velocity(v_leader, c, p, config.cohesion_k).clamped(config.pref_speed)
                humans.append(AgentState(i, p, v, r_h, goal, config.pref_speed, Role.GROUP_FOLLOWER))
        groups.append(GroupState(gid, c, r, ids, GroupKind.DYNAMIC, ids[leader_idx]))
    for p, goal in individuals:
        v = preferred_velocity(p, goal, config.pref_speed)
        humans.append(AgentState(next_id, p, v, r_h, goal, config.pref_speed, Role.INDIVIDUAL))
        next_id += 1

    return WorldState(0, robot, tuple(humans), tuple(groups), rng.bit_generator.state)


def static_group_world(config: ScenarioConfig, member_positions: Sequence[Vec2], seed: int = 0) -> WorldState:
    """Robot at its usual start plus a single static group at the given member positions (scripted scenarios)."""
    config.validate()
    if len(member_positions) < 2:
        raise InvalidConfig("a static group needs at least two members")
    robot = AgentState(
        ROBOT_ID, config.robot_start, Vec2(0.0, 0.0), config.robot_radius, config.robot_goal, config.pref_speed, Role.ROBOT
    )
    ids = tuple(range(ROBOT_ID + 1, ROBOT_ID + 1 + len(member_positions)))
    humans = tuple(
        AgentState(i, p, Vec2(0.0, 0.0), config.human_radius, p, config.pref_speed, Role.STATIC_GROUP_MEMBER)
        for i, p in zip(ids, member_positions)
    )
    c, r = group_centroid_radius(member_positions)
    group = GroupState(0, c, r, ids, GroupKind.STATIC)
    return WorldState(0, robot, humans, (group,), np.random.default_rng(seed).bit_generator.state)


def step_crowd(humans: Sequence[AgentState], groups: Sequence[GroupState], rng_state: dict,
               config: ScenarioConfig) -> CrowdFrame:
    """Advance every human by one step. The robot plays no part here."""
    dt = config.dt
    inv_tau, inv_dt = 1.0 / config.orca_tau, 1.0 / dt
    cutoff_sq = config.orca_neighbor_dist ** 2
    walkers = [h for h in humans if h.role in (Role.INDIVIDUAL, Role.GROUP_LEADER)]
    new_velocity: dict[int, Vec2] = {}
    for h in walkers:
        px, py = h.position.x, h.position.y
        lines = []
        for o in walkers:
            if o.id == h.id:
                continue
            ox, oy = o.position.x, o.position.y
            if (ox - px) ** 2 + (oy - py) ** 2 > cutoff_sq:
                continue
            lines.append(_orca_line(
                px, py, h.velocity.x, h.velocity.y, h.radius,
                ox, oy, o.velocity.x, o.velocity.y, o.radius, inv_tau, inv_dt,
            ))
        pref = preferred_velocity(h.position, h.goal, h.pref_speed)
        vx, vy = solve_lines(lines, (pref.x, pref.y), h.pref_speed)
        new_velocity[h.id] = Vec2(vx, vy).clamped(h.pref_speed)

    by_id = {h.id: h for h in humans}
    for g in groups:
        if g.kind is not GroupKind.DYNAMIC:
            continue
        v_leader = new_velocity[g.leader_id]
        for i in g.member_ids:
            if i == g.leader_id:
                continue
            p = by_id[i].position
            new_velocity[i] = follower_velocity(v_leader, g.centroid, p, config.cohesion_k).clamped(by_id[i].pref_speed)

    rng = _rng(rng_state)
    half = config.arena_half_extent - config.human_radius
    group_of_leader = {g.leader_id: g for g in groups if g.kind is GroupKind.DYNAMIC}
    new_goal: dict[int, Vec2] = {}
    moved: list[AgentState] = []
    for h in humans:
        v = new_velocity.get(h.id, Vec2(0.0, 0.0))
        p = Vec2(h.position.x + v.x * dt, h.position.y + v.y * dt)
        goal = new_goal.get(h.id, h.goal)
        if h.role in (Role.INDIVIDUAL, Role.GROUP_LEADER) and (p - h.goal).norm() < config.goal_radius:
            goal = _sample_point(rng, half)
            g = group_of_leader.get(h.id)
            if g is not None:
                for i in g.member_ids:
                    new_goal[i] = goal
        moved.append(AgentState(h.id, p, v, h.radius, goal, h.pref_speed, h.role))
    # followers earlier in id order than their leader pick up the fresh goal here
    moved = [replace(h, goal=new_goal[h.id]) if h.id in new_goal and h.goal != new_goal[h.id] else h for h in moved]

    by_id = {h.id: h for h in moved}
    return CrowdFrame(tuple(moved), _regroup(groups, by_id), rng.bit_generator.state)


def _terminal(robot: AgentState, crowd: CrowdFrame, time_step: int, config: ScenarioConfig) -> EpisodeOutcome | None:
    p = robot.position
    for h in crowd.humans:
        if (p - h.position).norm() < robot.radius + h.radius:
            return EpisodeOutcome(OutcomeKind.COLLISION, time_step)
    if config.terminate_on_group_intrusion and any(g.contains(p) for g in crowd.groups):
        return EpisodeOutcome(OutcomeKind.GROUP_COLLISION, time_step)
    if (p - robot.goal).norm() < config.goal_radius:
        return EpisodeOutcome(OutcomeKind.SUCCESS, time_step)
    if time_step >= config.max_steps:
        return EpisodeOutcome(OutcomeKind.TIMEOUT, time_step)
    return None


def step_world(world: WorldState, robot_action: Vec2, config: ScenarioConfig,
               crowd: CrowdFrame | None = None) -> tuple[WorldState, EpisodeOutcome | None]:
    """
    Advance the whole world by one step.

    ``crowd`` may carry the precomputed next crowd frame (from a
    :class:`CrowdRollout`); it must equal what :func:`step_crowd` would
    return for this world.
    """
    if crowd is None:
        crowd = step_crowd(world.humans, world.groups, world.rng_state, config)
    v = robot_action.clamped(config.pref_speed)
    r = world.robot
    robot = r.moved(Vec2(r.position.x + v.x * config.dt, r.position.y + v.y * config.dt), v)
    t = world.time_step + 1
    outcome = _terminal(robot, crowd, t, config)
    return WorldState(t, robot, crowd.humans, crowd.groups, crowd.rng_state), outcome


def observe(world: WorldState, config: ScenarioConfig) -> WorldObservation:
    """Robot-centric view: humans within sensor range, sorted by id; no group labels."""
    p = world.robot.position
    visible = tuple(
        sorted((h for h in world.humans if (h.position - p).norm() <= config.sensor_range), key=lambda h: h.id)
    )
    return WorldObservation(world.robot, visible, world.robot.goal)


class CrowdRollout:
    """
    Lazily computed crowd trajectory for one initial world.

    Since humans ignore the robot, frame ``t`` is the same for every robot
    policy; benchmark cells sharing a seed share one rollout.
    """

    def __init__(self, initial: WorldState, config: ScenarioConfig):
        self.config = config
        self.frames = [CrowdFrame(initial.humans, initial.groups, initial.rng_state)]

    def frame(self, t: int) -> CrowdFrame:
        while len(self.frames) <= t:
            last = self.frames[-1]
            self.frames.append(step_crowd(last.humans, last.groups, last.rng_state, self.config))
        return self.frames[t]

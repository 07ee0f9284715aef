"""
Episode runner, metrics, benchmark suites and trace files.

Outcome rates (SR, CR, GCR, TR) partition the episodes of a cell. GCR is
reported twice: as the share of episodes ended by a group intrusion, and
per episode as the fraction of steps the robot spent inside any group disk
(only informative when group intrusion does not end the episode).
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from groupnav.geom import Vec2
from groupnav.policies import OrcaPolicy, SocialForcePolicy
from groupnav.sim import (
    CrowdRollout,
    EpisodeOutcome,
    InvalidConfig,
    OutcomeKind,
    ScenarioConfig,
    WorldObservation,
    WorldState,
    generate_scenario,
    group_centroid_radius,
    observe,
    step_world,
)
from groupnav.social_force import SFParams
from groupnav.taga import TagaConfig, TagaMode, TagaPolicy

log = logging.getLogger(__name__)

Policy = Callable[[WorldObservation], Vec2]
BASE_POLICIES = ("orca", "sf")
TRACE_FORMAT = "groupnav-trace/1"
SUMMARY_COLUMNS = ("model", "SR", "CR", "GCR", "TR", "NT", "PL")


class EmptyTrace(ValueError):
    pass


class EmptyReportList(ValueError):
    pass


class TraceValidationError(ValueError):
    pass


@dataclass(frozen=True)
class StepRecord:
    t: int
    robot_pos: Vec2
    robot_vel: Vec2
    taga_mode: TagaMode
    inside_group: bool
    humans: tuple[tuple[int, Vec2, Vec2], ...]
    groups: tuple[tuple[int, Vec2, float, tuple[int, ...]], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "robot_pos": self.robot_pos.as_list(),
            "robot_vel": self.robot_vel.as_list(),
            "taga_mode": self.taga_mode.value,
            "inside_group": self.inside_group,
            "humans": [[i, p.as_list(), v.as_list()] for i, p, v in self.humans],
            "groups": [[gid, c.as_list(), r, list(ids)] for gid, c, r, ids in self.groups],
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> StepRecord:
        return cls(
            t=d["t"],
            robot_pos=Vec2(*d["robot_pos"]),
            robot_vel=Vec2(*d["robot_vel"]),
            taga_mode=TagaMode(d["taga_mode"]),
            inside_group=d["inside_group"],
            humans=tuple((i, Vec2(*p), Vec2(*v)) for i, p, v in d["humans"]),
            groups=tuple((gid, Vec2(*c), r, tuple(ids)) for gid, c, r, ids in d["groups"]),
        )


@dataclass(frozen=True)
class EpisodeReport:
    seed: int
    outcome: EpisodeOutcome
    nav_time: float
    path_length: float
    gcr_fraction: float

    def to_json(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "outcome": self.outcome.kind.value,
            "terminal_step": self.outcome.terminal_step,
            "nav_time": self.nav_time,
            "path_length": self.path_length,
            "gcr_fraction": self.gcr_fraction,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> EpisodeReport:
        return cls(
            d["seed"],
            EpisodeOutcome(OutcomeKind(d["outcome"]), d["terminal_step"]),
            d["nav_time"],
            d["path_length"],
            d["gcr_fraction"],
        )


@dataclass(frozen=True)
class BenchmarkSummary:
    sr: float
    cr: float
    gcr: float
    tr: float
    mean_nt: float | None
    mean_pl: float | None
    n_episodes: int


def gcr_fraction(steps: Sequence[StepRecord]) -> float:
    """Share of recorded steps with the robot inside a group disk."""
    if not steps:
        raise EmptyTrace("no steps recorded")
    return sum(1 for s in steps if s.inside_group) / len(steps)


def aggregate(reports: Sequence[EpisodeReport]) -> BenchmarkSummary:
    """Outcome rates over all episodes; NT and PL over successful episodes only (None if there are none)."""
    if not reports:
        raise EmptyReportList("cannot aggregate zero episodes")
    n = len(reports)
    counts = {kind: 0 for kind in OutcomeKind}
    for r in reports:
        counts[r.outcome.kind] += 1
    successes = [r for r in reports if r.outcome.kind is OutcomeKind.SUCCESS]
    mean_nt = math.fsum(r.nav_time for r in successes) / len(successes) if successes else None
    mean_pl = math.fsum(r.path_length for r in successes) / len(successes) if successes else None
    return BenchmarkSummary(
        sr=counts[OutcomeKind.SUCCESS] / n,
        cr=counts[OutcomeKind.COLLISION] / n,
        gcr=counts[OutcomeKind.GROUP_COLLISION] / n,
        tr=counts[OutcomeKind.TIMEOUT] / n,
        mean_nt=mean_nt,
        mean_pl=mean_pl,
        n_episodes=n,
    )


def _record(world: WorldState, mode: TagaMode) -> StepRecord:
    p = world.robot.position
    return StepRecord(
        t=world.time_step,
        robot_pos=p,
        robot_vel=world.robot.velocity,
        taga_mode=mode,
        inside_group=any(g.contains(p) for g in world.groups),
        humans=tuple((h.id, h.position, h.velocity) for h in world.humans),
        groups=tuple((g.group_id, g.centroid, g.radius, g.member_ids) for g in world.groups),
    )


def run_episode(
    config: ScenarioConfig,
    policy: Policy,
    seed: int,
    rollout: CrowdRollout | None = None,
) -> tuple[EpisodeReport, list[StepRecord]]:
    """
    Run one episode from ``generate_scenario(config, seed)`` until it terminates.

    ``rollout`` lets several policies share one precomputed crowd for the
    same seed; results are identical either way.
    """
    return run_from_world(config, policy, generate_scenario(config, seed), seed, rollout)


def run_from_world(
    config: ScenarioConfig,
    policy: Policy,
    world: WorldState,
    seed: int,
    rollout: CrowdRollout | None = None,
) -> tuple[EpisodeReport, list[StepRecord]]:
    """Same as :func:`run_episode` but starting from a given initial world."""
    if rollout is not None:
        first = rollout.frame(0)
        if first.humans != world.humans or first.rng_state != world.rng_state:
            raise ValueError("crowd rollout does not belong to this seed/config")
    if hasattr(policy, "reset"):
        policy.reset()

    start = world.robot.position
    steps: list[StepRecord] = []
    outcome = None
    while outcome is None:
        obs = observe(world, config)
        action = policy(obs)
        mode = getattr(policy, "mode", TagaMode.INACTIVE)
        crowd = rollout.frame(world.time_step + 1) if rollout is not None else None
        world, outcome = step_world(world, action, config, crowd)
        steps.append(_record(world, mode))

    points = [start] + [s.robot_pos for s in steps]
    path = math.fsum((b - a).norm() for a, b in zip(points, points[1:]))
    report = EpisodeReport(
        seed=seed,
        outcome=outcome,
        nav_time=outcome.terminal_step * config.dt,
        path_length=path,
        gcr_fraction=gcr_fraction(steps),
    )
    return report, steps


# ---------------------------------------------------------------------------
# suites


@dataclass(frozen=True)
class SuiteConfig:
    policies: tuple[str, ...] = ("orca", "orca+taga", "sf", "sf+taga")
    episodes: int = 100
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    taga: TagaConfig = field(default_factory=TagaConfig)
    sf: SFParams = field(default_factory=SFParams)
    write_traces: bool = True

    def __post_init__(self):
        for name in self.policies:
            parse_policy_name(name)
        if not isinstance(self.episodes, int) or self.episodes < 0:
            raise InvalidConfig("episodes must be a non-negative integer")

    def seeds(self) -> list[int]:
        return [self.scenario.seed + i for i in range(self.episodes)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": {"policies": list(self.policies), "episodes": self.episodes, "write_traces": self.write_traces},
            "scenario": self.scenario.to_dict(),
            "taga": {f.name: getattr(self.taga, f.name) for f in fields(self.taga)},
            "sf": {f.name: getattr(self.sf, f.name) for f in fields(self.sf)},
        }


def parse_policy_name(name: str) -> tuple[str, bool]:
    base, _, suffix = name.strip().partition("+")
    if base not in BASE_POLICIES or suffix not in ("", "taga"):
        raise InvalidConfig(f"unknown policy {name!r}; expected one of orca, sf with optional +taga")
    return base, suffix == "taga"


def build_policy(name: str, scenario: ScenarioConfig, taga: TagaConfig, sf: SFParams) -> Policy:
    base_name, with_taga = parse_policy_name(name)
    if base_name == "orca":
        base: Policy = OrcaPolicy(dt=scenario.dt, tau=scenario.orca_tau, neighbor_dist=scenario.orca_neighbor_dist)
    else:
        base = SocialForcePolicy(dt=scenario.dt, params=sf)
    return TagaPolicy(base, taga) if with_taga else base


def _coerce(raw: str, like: Any, key: str) -> Any:
    raw = raw.strip()
    try:
        if isinstance(like, bool):
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, tuple):
            return tuple(int(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise InvalidConfig(f"bad value for {key}: {raw!r}") from exc
    return raw


def _section(parser: configparser.ConfigParser, name: str, defaults: Any) -> dict[str, Any]:
    if not parser.has_section(name):
        return {}
    known = {f.name: getattr(defaults, f.name) for f in fields(defaults)}
    out = {}
    for key, raw in parser.items(name):
        if key not in known:
            raise InvalidConfig(f"unknown key [{name}] {key}")
        out[key] = _coerce(raw, known[key], f"[{name}] {key}")
    return out


def parse_suite(text: str) -> SuiteConfig:
    """
    Parse an INI-style suite file. Sections: ``[suite]`` (policies, episodes,
    write_traces), ``[scenario]``, ``[taga]`` and ``[sf]``; every key is
    optional and falls back to the built-in default. The TAGA safety margin
    defaults to the scenario's ``d_safe``.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig(f"unreadable suite file: {exc}") from exc
    unknown = set(parser.sections()) - {"suite", "scenario", "taga", "sf"}
    if unknown:
        raise InvalidConfig(f"unknown sections: {sorted(unknown)}")

    try:
        scenario = ScenarioConfig(**_section(parser, "scenario", ScenarioConfig()))
        taga_values = _section(parser, "taga", TagaConfig())
        taga_values.setdefault("d_safe", scenario.d_safe)
        taga_values.setdefault("detection_range", scenario.sensor_range)
        taga = TagaConfig(**taga_values)
        sf = SFParams(**_section(parser, "sf", SFParams()))
    except InvalidConfig:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from exc

    suite: dict[str, Any] = {}
    if parser.has_section("suite"):
        for key, raw in parser.items("suite"):
            if key == "policies":
                suite["policies"] = tuple(p.strip() for p in raw.split(",") if p.strip())
            elif key == "episodes":
                suite["episodes"] = _coerce(raw, 0, "[suite] episodes")
            elif key == "write_traces":
                suite["write_traces"] = _coerce(raw, True, "[suite] write_traces")
            else:
                raise InvalidConfig(f"unknown key [suite] {key}")
    return SuiteConfig(scenario=scenario, taga=taga, sf=sf, **suite)


def load_suite(path: str | Path) -> SuiteConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read suite file {path}: {exc}") from exc
    return parse_suite(text)


def trace_lines(header: dict[str, Any], steps: Iterable[StepRecord]) -> Iterable[str]:
    yield json.dumps(header, sort_keys=True)
    for s in steps:
        yield json.dumps(s.to_json(), sort_keys=True)


def write_trace(path: Path, header: dict[str, Any], steps: Sequence[StepRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for line in trace_lines(header, steps):
            fh.write(line)
            fh.write("\n")


def read_trace(path: str | Path) -> tuple[dict[str, Any], list[StepRecord]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise TraceValidationError(f"{path}: empty trace file")
    header = json.loads(lines[0])
    if header.get("format") != TRACE_FORMAT:
        raise TraceValidationError(f"{path}: not a {TRACE_FORMAT} trace")
    return header, [StepRecord.from_json(json.loads(line)) for line in lines[1:] if line.strip()]


def episode_header(model: str, config_echo: dict[str, Any], start: Vec2, report: EpisodeReport) -> dict[str, Any]:
    return {
        "format": TRACE_FORMAT,
        "type": "header",
        "model": model,
        "config": config_echo,
        "start": start.as_list(),
        "report": report.to_json(),
    }


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def summary_table(rows: Sequence[tuple[str, BenchmarkSummary]], config_echo: dict[str, Any] | None = None) -> str:
    buf = io.StringIO()
    if config_echo is not None:
        buf.write("# config: " + json.dumps(config_echo, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for model, s in rows:
        writer.writerow([model, _fmt(s.sr), _fmt(s.cr), _fmt(s.gcr), _fmt(s.tr), _fmt(s.mean_nt), _fmt(s.mean_pl)])
    return buf.getvalue()


def episodes_table(rows: Sequence[tuple[str, EpisodeReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "seed", "outcome", "terminal_step", "nav_time", "path_length", "gcr_fraction"])
    for model, r in rows:
        writer.writerow([
            model, r.seed, r.outcome.kind.value, r.outcome.terminal_step,
            f"{r.nav_time:.4f}", f"{r.path_length:.6f}", f"{r.gcr_fraction:.6f}",
        ])
    return buf.getvalue()


@dataclass
class BenchmarkResult:
    summaries: list[tuple[str, BenchmarkSummary]]
    reports: dict[str, list[EpisodeReport]]
    summary_text: str


def run_benchmark(suite: SuiteConfig, out_dir: str | Path | None = None) -> BenchmarkResult:
    """
    Run every policy cell of ``suite`` on the same per-episode seeds.

    All cells see identical initial worlds and crowd motion for a given
    seed. When ``out_dir`` is given, writes ``summary.csv``,
    ``episodes.csv``, ``config.json`` and (optionally) one trace per
    episode under ``traces/<model>/``.

    Raises:
        EmptyReportList: if the suite has zero episodes.
        PlacementFailure: on the first seed whose scenario cannot be placed.
    """
    if suite.episodes == 0:
        raise EmptyReportList("suite has zero episodes")
    scenario = suite.scenario
    echo = suite.to_dict()
    out = Path(out_dir) if out_dir is not None else None
    policies = {name: build_policy(name, scenario, suite.taga, suite.sf) for name in suite.policies}
    reports: dict[str, list[EpisodeReport]] = {name: [] for name in suite.policies}

    for seed in suite.seeds():
        world0 = generate_scenario(scenario, seed)
        rollout = CrowdRollout(world0, scenario)
        for name, policy in policies.items():
            report, steps = run_episode(scenario, policy, seed, rollout)
            reports[name].append(report)
            if out is not None and suite.write_traces:
                header = episode_header(name, echo, world0.robot.position, report)
                write_trace(out / "traces" / name.replace("+", "_") / f"episode_{seed:06d}.jsonl", header, steps)
        log.debug("seed %d done", seed)

    summaries = [(name, aggregate(reports[name])) for name in suite.policies]
    text = summary_table(summaries, echo)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(text)
        rows = [(name, r) for name in suite.policies for r in reports[name]]
        (out / "episodes.csv").write_text(episodes_table(rows))
        (out / "config.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    return BenchmarkResult(summaries, reports, text)


# ---------------------------------------------------------------------------
# validation


def validate_trace(header: dict[str, Any], steps: Sequence[StepRecord], tol: float = 1e-9) -> list[str]:
    """
    Re-derive the trace's invariants from raw positions. Returns a list of
    human-readable violations (empty when the trace is consistent).
    """
    problems: list[str] = []
    if not steps:
        return ["trace has no step records"]
    report = EpisodeReport.from_json(header["report"])
    scenario = header.get("config", {}).get("scenario", {})
    dt = scenario.get("dt")
    pref_speed = scenario.get("pref_speed")

    for k, s in enumerate(steps):
        if s.t != k + 1:
            problems.append(f"step {k}: expected t={k + 1}, found {s.t}")
        positions = {i: p for i, p, _ in s.humans}
        inside = False
        for gid, c, r, ids in s.groups:
            if len(ids) < 2:
                problems.append(f"t={s.t} group {gid}: fewer than two members")
                continue
            missing = [i for i in ids if i not in positions]
            if missing:
                problems.append(f"t={s.t} group {gid}: members {missing} absent from humans")
                continue
            c_ref, r_ref = group_centroid_radius([positions[i] for i in ids])
            if (c_ref - c).norm() > tol:
                problems.append(f"t={s.t} group {gid}: centroid off by {(c_ref - c).norm():.3g}")
            if abs(r_ref - r) > tol:
                problems.append(f"t={s.t} group {gid}: radius off by {abs(r_ref - r):.3g}")
            if (s.robot_pos - c).norm() < r:
                inside = True
        if inside != s.inside_group:
            problems.append(f"t={s.t}: inside_group={s.inside_group} but geometry says {inside}")
        if pref_speed is not None and s.robot_vel.norm() > pref_speed + 1e-9:
            problems.append(f"t={s.t}: robot speed {s.robot_vel.norm():.6g} exceeds {pref_speed}")
        if dt is not None and k > 0:
            expected = steps[k - 1].robot_pos + s.robot_vel * dt
            if (expected - s.robot_pos).norm() > tol:
                problems.append(f"t={s.t}: robot position inconsistent with velocity")

    start = Vec2(*header["start"])
    points = [start] + [s.robot_pos for s in steps]
    path = math.fsum((b - a).norm() for a, b in zip(points, points[1:]))
    if abs(path - report.path_length) > tol:
        problems.append(f"path_length {report.path_length} != recomputed {path}")
    inside_count = 0
    for s in steps:
        if any((s.robot_pos - c).norm() < r for _, c, r, _ in s.groups):
            inside_count += 1
    if inside_count / len(steps) != report.gcr_fraction:
        problems.append(f"gcr_fraction {report.gcr_fraction} != recomputed {inside_count / len(steps)}")
    if report.outcome.terminal_step != steps[-1].t:
        problems.append(f"terminal_step {report.outcome.terminal_step} != last record {steps[-1].t}")
    if dt is not None and abs(report.nav_time - report.outcome.terminal_step * dt) > tol:
        problems.append("nav_time inconsistent with terminal_step * dt")
    return problems


def validate_trace_file(path: str | Path) -> list[str]:
    header, steps = read_trace(path)
    return validate_trace(header, steps)

"""
Acceptance suite: one test per acceptance criterion, each printing a single
PASS/FAIL line (also collected in the terminal summary).
"""

import math
import time

import numpy as np
import pytest

from groupnav.bench import (
    SuiteConfig,
    build_policy,
    load_suite,
    run_benchmark,
    run_episode,
    run_from_world,
    validate_trace,
)
from groupnav.geom import Disk, Vec2, tangent_points
from groupnav.orca import orca_velocity
from groupnav.policies import stationary_policy
from groupnav.sim import GroupKind, OutcomeKind, ScenarioConfig, generate_scenario, observe, static_group_world
from groupnav.social_force import SFParams
from groupnav.taga import TagaConfig, detect_groups
from oracles import (
    detection_accuracy,
    grid_search_velocity,
    halfplanes_for,
    observation_from_step,
    random_orca_instance,
    run_symmetric_pair,
)

SUITE_TEXT = """\
[suite]
policies = orca, orca+taga, sf, sf+taga
episodes = 100
"""


@pytest.fixture(scope="module")
def default_suite(tmp_path_factory):
    """Full default 4-cell suite, run from a suite file with traces written."""
    root = tmp_path_factory.mktemp("suite")
    path = root / "default.ini"
    path.write_text(SUITE_TEXT)
    t0 = time.perf_counter()
    result = run_benchmark(load_suite(path), root / "run1")
    elapsed = time.perf_counter() - t0
    return path, root, result, elapsed


def _relative_reduction(base: float, wrapped: float) -> float:
    return (base - wrapped) / base if base > 0 else float("nan")


def test_criterion_01_gcr_reduction(default_suite, criterion):
    _, _, result, elapsed = default_suite
    s = dict(result.summaries)
    orca = _relative_reduction(s["orca"].gcr, s["orca+taga"].gcr)
    sf = _relative_reduction(s["sf"].gcr, s["sf+taga"].gcr)
    ok = orca >= 0.5 and sf >= 0.5 and elapsed < 120.0
    detail = (
        f"ORCA GCR {s['orca'].gcr:.2f}->{s['orca+taga'].gcr:.2f} ({orca:.0%}), "
        f"SF GCR {s['sf'].gcr:.2f}->{s['sf+taga'].gcr:.2f} ({sf:.0%}), suite {elapsed:.1f}s"
    )
    assert criterion(1, "GCR reduction >= 50% with TAGA", ok, detail), detail


def test_criterion_02_success_rate_non_collapse(default_suite, criterion):
    _, _, result, _ = default_suite
    s = dict(result.summaries)
    d_orca = s["orca+taga"].sr - s["orca"].sr
    d_sf = s["sf+taga"].sr - s["sf"].sr
    ok = abs(d_orca) <= 0.15 + 1e-12 and abs(d_sf) <= 0.15 + 1e-12
    detail = (
        f"ORCA SR {s['orca'].sr:.2f}->{s['orca+taga'].sr:.2f}, SF SR {s['sf'].sr:.2f}->{s['sf+taga'].sr:.2f}"
    )
    assert criterion(2, "TAGA SR within 0.15 of base", ok, detail), detail


def test_criterion_03_metric_identity(default_suite, criterion):
    _, _, result, _ = default_suite
    no_term = SuiteConfig(episodes=20, scenario=ScenarioConfig(terminate_on_group_intrusion=False), write_traces=False)
    summaries = list(result.summaries) + list(run_benchmark(no_term).summaries)
    worst = max(abs(s.sr + s.cr + s.gcr + s.tr - 1.0) for _, s in summaries)
    ok = worst <= 1e-9
    detail = f"{len(summaries)} summaries, max |SR+CR+GCR+TR-1| = {worst:.1e}"
    assert criterion(3, "SR+CR+GCR+TR = 1", ok, detail), detail


def test_criterion_04_tangent_geometry(criterion):
    rng = np.random.default_rng(2024)
    worst_orth = worst_circle = 0.0
    for _ in range(10_000):
        c = Vec2(*rng.uniform(-10, 10, 2))
        r = rng.uniform(0.05, 5.0)
        ang = rng.uniform(0, 2 * math.pi)
        d = r * (1.0 + rng.uniform(1e-3, 5.0))
        p = c + Vec2(math.cos(ang), math.sin(ang)) * d
        for t in tangent_points(p, Disk(c, r)):
            worst_orth = max(worst_orth, abs((t - c).dot(t - p)))
            worst_circle = max(worst_circle, abs((t - c).norm() - r))
    ok = worst_orth < 1e-9 and worst_circle < 1e-9
    detail = f"10000 pairs, max orthogonality {worst_orth:.1e}, max on-circle {worst_circle:.1e}"
    assert criterion(4, "tangent residuals < 1e-9", ok, detail), detail


def test_criterion_05_orca_oracle(criterion):
    rng = np.random.default_rng(5)
    diffs = []
    while len(diffs) < 200:
        me, neighbors, v_pref = random_orca_instance(rng)
        planes = halfplanes_for(me, neighbors)
        grid = grid_search_velocity(planes, v_pref)
        if grid is None:
            continue
        diffs.append((orca_velocity(me, neighbors, v_pref) - grid).norm())
    over = sum(d > 0.02 for d in diffs)

    collisions = 0
    for _ in range(100):
        ang = rng.uniform(0, 2 * math.pi)
        start = Vec2(math.cos(ang), math.sin(ang)) * rng.uniform(1.0, 5.0)
        collisions += run_symmetric_pair(start, steps=200) < 0.6
    ok = over == 0 and collisions == 0
    detail = (
        f"LP vs 201x201 grid: {over}/200 beyond 0.02 m/s (max {max(diffs):.3f}); "
        f"head-on collisions {collisions}/100"
    )
    assert criterion(5, "ORCA matches grid oracle, no head-on collisions", ok, detail), detail


def test_criterion_06_group_invariants(criterion):
    cfg = ScenarioConfig(terminate_on_group_intrusion=False)
    violations = 0
    worst_excess = -math.inf
    n_steps = 0
    for seed in range(50):
        w = generate_scenario(cfg, seed)
        initial = {
            i: (w.human(i).position - g.centroid).norm()
            for g in w.groups if g.kind is GroupKind.DYNAMIC
            for i in g.member_ids if i != g.leader_id
        }
        report, steps = run_episode(cfg, stationary_policy, seed)
        header = {"start": w.robot.position.as_list(), "report": report.to_json(), "config": {"scenario": cfg.to_dict()}}
        violations += len(validate_trace(header, steps))
        n_steps += len(steps)
        for s in steps:
            pos = {i: p for i, p, _ in s.humans}
            for _, c, _, ids in s.groups:
                for i in ids:
                    if i in initial:
                        worst_excess = max(worst_excess, (pos[i] - c).norm() - initial[i])
    ok = violations == 0 and worst_excess <= 0.2
    detail = f"{n_steps} steps, validator violations {violations}, worst follower excess {worst_excess:.3f} m"
    assert criterion(6, "group invariants and follower cohesion", ok, detail), detail


def test_criterion_07_non_interference(criterion):
    # group-free worlds; runs whose observations ever contain a detectable
    # cluster (e.g. two individuals walking side by side) are not in scope
    cfg = ScenarioConfig(n_groups=0)
    taga = TagaConfig()
    in_scope = {"orca": 0, "sf": 0}
    skipped = mismatched = 0
    seed = 0
    while min(in_scope.values()) < 20:
        world = generate_scenario(cfg, seed)
        for name in in_scope:
            if in_scope[name] >= 20:
                continue
            base = run_from_world(cfg, build_policy(name, cfg, taga, SFParams()), world, seed)
            observations = [observe(world, cfg)] + [observation_from_step(cfg, s) for s in base[1][:-1]]
            if any(detect_groups(o, taga) for o in observations):
                skipped += 1
                continue
            in_scope[name] += 1
            wrapped = run_from_world(cfg, build_policy(name + "+taga", cfg, taga, SFParams()), world, seed)
            mismatched += wrapped != base
        seed += 1
    ok = mismatched == 0
    detail = f"20 episodes x (orca, sf), {mismatched} trace mismatches, {skipped} runs out of scope"
    assert criterion(7, "wrapped == base without groups", ok, detail), detail


def test_criterion_08_scripted_boundary_respect(criterion):
    cfg = ScenarioConfig(n_individuals=0, n_groups=0)
    # C-shaped static group opening toward the robot, centered on the start-goal line
    members = [Vec2(1.3 * math.cos(math.radians(a)), 1.3 * math.sin(math.radians(a))) for a in (0, 45, 90, 135, 180)]
    world = static_group_world(cfg, members)
    g = world.groups[0]
    results = {}
    for name in ("orca", "orca+taga"):
        report, steps = run_from_world(cfg, build_policy(name, cfg, TagaConfig(), SFParams()), world, 0)
        min_d = min((s.robot_pos - g.centroid).norm() for s in steps)
        results[name] = (report.outcome.kind, min_d, any(s.inside_group for s in steps))
    taga_kind, taga_min, _ = results["orca+taga"]
    _, orca_min, orca_inside = results["orca"]
    ok = taga_kind is OutcomeKind.SUCCESS and taga_min >= g.radius and orca_inside
    detail = (
        f"r_g={g.radius:.3f}; ORCA+TAGA {taga_kind.value} min dist {taga_min:.3f}; "
        f"ORCA min dist {orca_min:.3f} (entered disk: {orca_inside})"
    )
    assert criterion(8, "scripted group boundary respected", ok, detail), detail


def test_criterion_09_determinism(default_suite, criterion):
    path, root, _, _ = default_suite
    run_benchmark(load_suite(path), root / "run2")
    a = (root / "run1" / "summary.csv").read_bytes()
    b = (root / "run2" / "summary.csv").read_bytes()
    ok = a == b
    detail = f"summary {len(a)} bytes, identical={ok}"
    assert criterion(9, "byte-identical rerun", ok, detail), detail


def test_criterion_10_group_detection(criterion):
    cfg = ScenarioConfig(terminate_on_group_intrusion=False)
    taga = TagaConfig()
    r = detection_accuracy(cfg, taga, build_policy("orca", cfg, taga, SFParams()), range(50))
    visible = r["full"] + r["partial"]
    miss_rate = (r["full_miss"] + r["partial_miss"]) / visible
    ok = r["merges"] == 0 and r["full_miss"] == 0 and miss_rate <= 0.05
    detail = (
        f"{r['steps']} steps; merges {r['merges']}; fully visible misses {r['full_miss']}/{r['full']}; "
        f"per-step miss rate {miss_rate:.3f}"
    )
    assert criterion(10, "group detection accuracy", ok, detail), detail

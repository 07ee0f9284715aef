"""Command-line entry point: ``bench run | episode | validate``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from groupnav.bench import (
    EmptyReportList,
    TraceValidationError,
    aggregate,
    build_policy,
    episode_header,
    load_suite,
    run_benchmark,
    run_episode,
    summary_table,
    validate_trace_file,
    write_trace,
)
from groupnav.sim import InvalidConfig, PlacementFailure, ScenarioConfig, generate_scenario
from groupnav.social_force import SFParams
from groupnav.taga import TagaConfig

EXIT_OK = 0
EXIT_INVALID_CONFIG = 1
EXIT_PLACEMENT = 2
EXIT_VALIDATION = 3

log = logging.getLogger("groupnav")


def _cmd_run(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite)
    out = Path(args.out) if args.out else Path(args.suite).with_name(Path(args.suite).stem + "_results")
    result = run_benchmark(suite, out)
    sys.stdout.write(result.summary_text)
    log.info("results written to %s", out)
    return EXIT_OK


def _cmd_episode(args: argparse.Namespace) -> int:
    scenario = ScenarioConfig(terminate_on_group_intrusion=not args.no_group_termination)
    taga = TagaConfig(d_safe=scenario.d_safe, detection_range=scenario.sensor_range)
    name = args.policy + ("+taga" if args.taga else "")
    policy = build_policy(name, scenario, taga, SFParams())
    report, steps = run_episode(scenario, policy, args.seed)
    if args.trace:
        echo = {
            "scenario": scenario.to_dict(),
            "taga": dataclasses.asdict(taga),
            "sf": dataclasses.asdict(SFParams()),
        }
        start = generate_scenario(scenario, args.seed).robot.position
        write_trace(Path(args.trace), episode_header(name, echo, start, report), steps)
    print(json.dumps({"model": name, **report.to_json()}, sort_keys=True))
    sys.stdout.write(summary_table([(name, aggregate([report]))]))
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        problems = validate_trace_file(args.trace)
    except (OSError, ValueError, KeyError, TypeError, TraceValidationError) as exc:
        print(f"invalid trace: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for p in problems:
        print(p)
    if problems:
        print(f"{len(problems)} violation(s)", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Crowd navigation benchmark with group-aware avoidance.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite")
    run.add_argument("--suite", required=True, help="INI suite file")
    run.add_argument("--out", help="output directory (default: <suite>_results next to the suite file)")
    run.set_defaults(func=_cmd_run)

    ep = sub.add_parser("episode", help="run a single episode at default settings")
    ep.add_argument("--policy", choices=("orca", "sf"), required=True)
    ep.add_argument("--taga", action="store_true", help="wrap the policy with group-tangent avoidance")
    ep.add_argument("--seed", type=int, required=True)
    ep.add_argument("--no-group-termination", action="store_true", help="do not end the episode on group intrusion")
    ep.add_argument("--trace", help="write the step trace to this file")
    ep.set_defaults(func=_cmd_episode)

    val = sub.add_parser("validate", help="re-check a trace file's invariants")
    val.add_argument("--trace", required=True)
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except PlacementFailure as exc:
        print(f"placement failure (seed {exc.seed}): {exc}", file=sys.stderr)
        return EXIT_PLACEMENT
    except EmptyReportList as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: closed-loop scenario runs and built-in self checks."""

from __future__ import annotations

import argparse
import sys

from .config import build_sim_config, load_config
from .errors import ConfigError, SimulationError
from .harness import emit_outputs, run_simulation
from .oracles import run_all_checks


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nano-nmpc",
        description="Nano-quadrotor NMPC closed-loop simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="fly a scenario and write log, summary, figures")
    run_p.add_argument("--scenario", choices=("hover", "steps", "cruise", "helix"),
                       help="scenario preset (overrides the config file)")
    run_p.add_argument("--config", help="JSON config file")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--duration", type=float, help="run duration [s]")
    run_p.add_argument("--horizon", type=int, help="prediction horizon length")
    run_p.add_argument("--rate", type=float, help="control rate [Hz]")
    run_p.add_argument("--seed", type=int, help="rng seed for measurement noise")
    run_p.add_argument("--no-timing-columns", action="store_true",
                       help="omit solver timing columns from the CSV (deterministic output)")
    run_p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    check_p = sub.add_parser("check", help="run the built-in oracle suites")
    check_p.add_argument("--fast", action="store_true", help="reduced sample counts")
    return parser


def _cmd_run(args) -> int:
    raw = load_config(args.config) if args.config else {}
    overrides = {}
    if args.scenario:
        overrides.setdefault("scenario", {})["kind"] = args.scenario
    if args.horizon is not None:
        overrides.setdefault("ocp", {})["horizon"] = args.horizon
    sim_patch = {}
    if args.duration is not None:
        sim_patch["duration"] = args.duration
    if args.rate is not None:
        sim_patch["control_rate"] = args.rate
    if args.seed is not None:
        sim_patch["seed"] = args.seed
    if sim_patch:
        overrides["sim"] = sim_patch

    config = build_sim_config(raw, **overrides)
    try:
        log, summary = run_simulation(config)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.state is not None:
            print(f"last plant state: {exc.state}", file=sys.stderr)
        return 2

    paths = emit_outputs(
        log, summary, args.out,
        include_timing=not args.no_timing_columns,
        make_plots=not args.no_plots,
    )
    print(f"scenario: {config.scenario.kind}, rows: {summary.rows}")
    print(f"rms position error: {summary.rms_pos_error:.4f} m  "
          f"(max {summary.max_pos_error:.4f} m)")
    print(f"solver time: mean {1e3 * summary.solver_time_mean:.3f} ms, "
          f"max {1e3 * summary.solver_time_max:.3f} ms")
    print(f"bound violations: {summary.bound_violations}, "
          f"solver failures: {summary.solver_failures}")
    print(f"wrote {paths['csv']} and {paths['summary']}")
    if "figures" in paths:
        for p in paths["figures"]:
            print(f"wrote {p}")
    return 0 if (summary.solver_failures == 0 and summary.bound_violations == 0) else 1


def _cmd_check(args) -> int:
    results = run_all_checks(fast=args.fast)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_check(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

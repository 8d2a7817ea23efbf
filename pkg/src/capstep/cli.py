"""Command-line front end: scenario runs, stability sweeps, benchmarks.

Exit codes: 0 success, 2 usage error (argparse), 3 config error,
4 scenario error, 5 benchmark failure.  All numeric output uses a plain
decimal point, never localized formats.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import ConfigError, GaitConfig, load_config
from .estimation import StateEstimator, read_sensor_log
from .plant import (
    Scenario,
    ScenarioError,
    SweepSpec,
    grid_cells,
    load_scenario,
    run_scenario,
    sweep_phase_space,
    write_sweep_csv,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_SCENARIO = 4
EXIT_BENCH = 5

DEFAULT_GRID = "cy=-0.04:0.16:21,vy=-0.5:0.5:21|cx=-0.16:0.16:21,vx=-0.6:0.6:21"


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load(config_path: str) -> GaitConfig:
    return load_config(config_path)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        sc = load_scenario(args.scenario)
        if args.seed is not None:
            sc = replace(sc, seed=args.seed)
        if args.mode is not None:
            sc = replace(sc, mode="open_loop" if args.mode == "open" else "closed_loop")
    except ScenarioError as exc:
        return _fail(EXIT_SCENARIO, str(exc))

    os.makedirs(args.out, exist_ok=True)
    result = run_scenario(sc, cfg, time_controller=sc.mode == "closed_loop")
    log_path = os.path.join(args.out, f"{sc.name}.csv")
    write_trajectory_csv(log_path, result.records)
    report = result.report.to_dict()
    report_path = os.path.join(args.out, f"{sc.name}.report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(json.dumps(report, indent=2))
    print(f"log: {log_path}")
    return EXIT_OK


def _parse_range(token: str) -> tuple[str, tuple[float, float, int]]:
    name, _, rng = token.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError(f"range '{token}' is not name=a:b:n")
    return name.strip(), (float(parts[0]), float(parts[1]), int(parts[2]))


def parse_grid(spec: str):
    """Parse "cy=a:b:n,vy=a:b:n|cx=a:b:n,vx=a:b:n" into sweep cells.

    The part before '|' is the lateral grid, the part after the sagittal
    one; either may be omitted.
    """
    cells = []
    lateral, _, sagittal = spec.partition("|")
    for axis, part, names in (
        ("lateral", lateral, ("cy", "vy")),
        ("sagittal", sagittal, ("cx", "vx")),
    ):
        part = part.strip()
        if not part:
            continue
        ranges = dict(_parse_range(tok) for tok in part.split(","))
        missing = set(names) - set(ranges)
        if missing:
            raise ValueError(f"{axis} grid missing ranges: {sorted(missing)}")
        cells.extend(grid_cells(axis, ranges[names[0]], ranges[names[1]]))
    if not cells:
        raise ValueError("grid spec produced no cells")
    return tuple(cells)


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        cells = parse_grid(args.grid)
    except ValueError as exc:
        return _fail(EXIT_SCENARIO, str(exc))
    spec = SweepSpec(seed=args.seed if args.seed is not None else 0)
    result = sweep_phase_space(cells, spec, cfg, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "stability_map.csv")
    write_sweep_csv(out_path, result)
    summary = {
        "cells": len(cells),
        "open_recovered": result.count("open_loop"),
        "closed_recovered": result.count("closed_loop"),
        "closed_contains_open": result.contains_open(),
    }
    print(json.dumps(summary, indent=2))
    print(f"map: {out_path}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    ticks = args.ticks
    sc = Scenario(
        name="bench",
        mode="closed_loop",
        duration=ticks * cfg.rho,
        seed=args.seed if args.seed is not None else 0,
        noise_pos=1e-4,
        noise_vel=1e-3,
    )
    result = run_scenario(sc, cfg, keep_log=False, time_controller=True)
    rep = result.report
    if rep.tick_mean_s is None:
        return _fail(EXIT_BENCH, "not enough ticks for timing statistics")
    print(f"controller ticks: {rep.ticks}")
    print(f"mean tick: {rep.tick_mean_s * 1e3:.4f} ms")
    print(f"p99 tick:  {rep.tick_p99_s * 1e3:.4f} ms")
    print(f"max tick:  {rep.tick_max_s * 1e3:.4f} ms")
    if rep.tick_mean_s * 1e3 >= args.budget_ms:
        print(
            f"FAIL: mean tick {rep.tick_mean_s * 1e3:.4f} ms >= budget "
            f"{args.budget_ms} ms",
            file=sys.stderr,
        )
        return EXIT_BENCH
    print(f"PASS: mean tick below {args.budget_ms} ms budget")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        frames = read_sensor_log(args.log)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_SCENARIO, f"cannot read sensor log: {exc}")
    estimator = StateEstimator(cfg.kinematics, cfg.estimation, args.support)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("time,cx,vx,cy,vy,lambda,event\n")
        for frame in frames:
            tick = estimator.update(frame)
            c = tick.com
            fh.write(
                f"{frame.timestamp:.10g},{c.cx:.12g},{c.vx:.12g},"
                f"{c.cy:.12g},{c.vy:.12g},{tick.support.support_sign},"
                f"{'exchange' if tick.exchanged else ''}\n"
            )
    print(f"estimates: {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capstep",
        description="Capture-step gait engine: runs, sweeps, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write CSV logs")
    run.add_argument("--config", required=True, help="gait config YAML")
    run.add_argument("--scenario", required=True, help="scenario YAML")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    run.add_argument(
        "--mode", choices=["open", "closed"], default=None, help="override mode"
    )
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="phase-space stability map, both modes")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default="out")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument(
        "--grid",
        default=DEFAULT_GRID,
        help='grid spec "cy=a:b:n,vy=a:b:n|cx=a:b:n,vx=a:b:n"',
    )
    sweep.set_defaults(func=cmd_sweep)

    bench = sub.add_parser("bench", help="controller tick latency benchmark")
    bench.add_argument("--config", required=True)
    bench.add_argument("--ticks", type=int, default=100_000)
    bench.add_argument("--budget-ms", type=float, default=0.5)
    bench.add_argument("--seed", type=int, default=None)
    bench.set_defaults(func=cmd_bench)

    est = sub.add_parser("estimate", help="run state estimation over a sensor log")
    est.add_argument("--config", required=True)
    est.add_argument("--log", required=True, help="sensor CSV (see README schema)")
    est.add_argument("--out", default="out/com_estimates.csv")
    est.add_argument("--support", type=int, choices=[-1, 1], default=1)
    est.set_defaults(func=cmd_estimate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

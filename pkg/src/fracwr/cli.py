"""Command-line front end.

Exit status: 0 on success, 2 for invalid input, 3 when a solver did not reach
the tolerance (or a complexity envelope was exceeded).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from . import bench

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

log = logging.getLogger("fracwr")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", help="built-in problem name")
    parser.add_argument("--delta", type=float, help="fractional order in (0, 1]")
    parser.add_argument("--nx", help="spatial subdivisions (comma list for ladders)")
    parser.add_argument("--ny", type=int, help="2d only; must equal nx")
    parser.add_argument("--nt", help="time steps (comma list for ladders)")
    parser.add_argument("--cycle", type=str.upper, choices=["V", "W"])
    parser.add_argument("--nu1", type=int)
    parser.add_argument("--nu2", type=int)
    parser.add_argument("--tol", type=float, help="relative residual reduction (default 1e-10)")
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--coarsest-n", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--config", help="key = value file; command-line flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracwr", description="Multigrid waveform relaxation for time-fractional diffusion"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve1d": "solve the 1d linear problem",
        "solve2d": "solve the 2d linear problem",
        "solve-nonlinear": "solve the 1d porous-media problem with FAS",
        "sama": "semi-algebraic mode analysis sweep",
        "order-study": "temporal discretisation order against the exact solution",
        "complexity": "solve-time scaling with M and N",
    }
    for name in bench.COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _common(p)
        if name.startswith("solve"):
            p.add_argument("--dump", help="write the solution to this .npz file")
        if name == "solve-nonlinear" or name == "complexity":
            p.add_argument("--upwind", choices=["forward", "backward"])
        if name == "sama":
            p.add_argument("--lambda-exp", help="log2 lambda range lo..hi[:step] (default -8..8:2)")
            p.add_argument("--theta-samples", type=int, help="samples per axis (default 64)")
            p.add_argument("--dim", type=int, choices=[1, 2])
            p.add_argument("--measure", action="store_true", default=None,
                           help="add measured multilevel factors")
            p.add_argument("--measure-nx", type=int, help="grid for measured factors (default 256)")
        if name == "complexity":
            p.add_argument("--repeats", type=int, help="best-of repeats per timing (default 3)")
    return parser


def _config_from_args(args: argparse.Namespace) -> bench.ExperimentConfig:
    values = {}
    if args.config:
        values.update(bench.parse_config_file(args.config))
    skip = {"command", "config", "verbose"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            values[key] = value
    try:
        numeric = {
            "delta": float, "tol": float, "ny": int, "nu1": int, "nu2": int, "max_iters": int,
            "coarsest_n": int, "seed": int, "theta_samples": int, "dim": int, "measure_nx": int,
            "repeats": int,
        }
        for key, conv in numeric.items():
            if key in values:
                values[key] = conv(values[key])
        if "measure" in values and isinstance(values["measure"], str):
            values["measure"] = values["measure"].lower() in ("1", "true", "yes", "on")
        config = bench.ExperimentConfig.from_mapping(args.command, values)
    except (TypeError, ValueError) as exc:
        raise bench.ConfigError(str(exc)) from exc
    return config.validate()


def _emit(config, header, rows, title):
    if config.out:
        bench.write_csv(config.out, header, rows, title)
    else:
        bench.write_csv(sys.stdout, header, rows, title)


def run(config: bench.ExperimentConfig) -> int:
    cmd = config.command
    if cmd.startswith("solve"):
        report, solution = bench.run_solve(config)
        _emit(config, bench.SOLVE_HEADER, bench.report_rows(report), f"{cmd} {report.grid}")
        if config.dump:
            np.savez(config.dump, values=solution.values, initial=solution.initial)
        log.warning(report.summary())
        return EXIT_OK if report.converged else EXIT_NOT_CONVERGED
    if cmd == "sama":
        rows = bench.run_sama_sweep(config)
        _emit(config, bench.SAMA_HEADER, bench.sama_rows(rows), f"sama dim={config.dim}")
        return EXIT_OK
    if cmd == "order-study":
        rows = bench.run_order_study(config)
        _emit(config, bench.ORDER_HEADER, bench.order_rows(rows), f"order-study delta={config.delta:g}")
        return EXIT_OK
    rows = bench.run_complexity(config)
    _emit(config, bench.TIMING_HEADER, bench.timing_rows(rows), "complexity")
    return EXIT_OK if bench.complexity_ok(rows) else EXIT_NOT_CONVERGED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        config = _config_from_args(args)
    except (bench.ConfigError, OSError) as exc:
        print(f"fracwr: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return run(config)
    except bench.ConfigError as exc:
        print(f"fracwr: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

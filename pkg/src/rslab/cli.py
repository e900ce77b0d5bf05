"""Command-line interface.

Subcommands:

* ``run-curves``  — PCS/EOC/allocation curves for every configured policy.
* ``run-table``   — budget required to reach target PCS levels.
* ``solve-optimal`` — optimal allocation fractions and residuals.
* ``selftest``    — built-in oracle suites.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from rslab import harness, selftest
from rslab.config import ConfigError, load_config
from rslab.optimality import residuals, solve_optimal_allocation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _float_list(text: str, option: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{option} must be a comma-separated list of numbers: {exc}") from exc
    if not values:
        raise ConfigError(f"{option} must name at least one value")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rslab",
        description="Ranking-and-selection experiments: myopic procedures, OCBA, and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    curves = sub.add_parser("run-curves", help="estimate PCS/EOC curves and write them as CSV")
    curves.add_argument("--config", required=True, help="TOML experiment configuration")
    curves.add_argument("--out", required=True, help="output CSV path")
    curves.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")

    table = sub.add_parser("run-table", help="budgets needed to reach target PCS levels")
    table.add_argument("--config", required=True, help="TOML experiment configuration")
    table.add_argument("--targets", default="0.88,0.90,0.92,0.94",
                       help="comma-separated PCS targets (default 0.88,0.90,0.92,0.94)")
    table.add_argument("--out", required=True, help="output CSV path")
    table.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")

    solve = sub.add_parser("solve-optimal", help="solve the optimal-allocation conditions")
    solve.add_argument("--means", required=True, help="comma-separated true means")
    solve.add_argument("--sds", required=True, help="comma-separated true standard deviations")
    solve.add_argument("--counts", default=None,
                       help="optional comma-separated counts whose residuals to report")

    sub.add_parser("selftest", help="run the built-in oracle suites")
    return parser


def _cmd_run_curves(args) -> int:
    config = load_config(args.config)
    results = harness.estimate_curves(config, workers=args.workers)
    rows = harness.curve_rows(results, config.tracked_designs)
    harness.write_csv(rows, args.out, kind="curves")
    print(f"wrote {len(rows)} curve rows to {args.out}")
    return EXIT_OK


def _cmd_run_table(args) -> int:
    config = load_config(args.config)
    targets = _float_list(args.targets, "--targets")
    rows = harness.budget_to_target(config, targets, workers=args.workers)
    harness.write_csv(rows, args.out, kind="table")
    print(f"wrote {len(rows)} table rows to {args.out}")
    return EXIT_OK


def _cmd_solve_optimal(args) -> int:
    means = _float_list(args.means, "--means")
    sds = _float_list(args.sds, "--sds")
    if len(means) != len(sds):
        raise ConfigError("--means and --sds must have the same length")
    try:
        solution = solve_optimal_allocation(means, sds)
        if args.counts is not None:
            counts = _float_list(args.counts, "--counts")
            if len(counts) != len(means):
                raise ConfigError("--counts must have the same length as --means")
            res = residuals(counts, means, sds)
        else:
            res = residuals(solution.alpha, means, sds)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    print("quantity,design,value")
    for i, a in enumerate(solution.alpha):
        print(f"alpha_star,{i + 1},{a:.10g}")
    if args.counts is not None:
        counts = _float_list(args.counts, "--counts")
        fractions = np.asarray(counts) / np.sum(counts)
        for i, a in enumerate(fractions):
            print(f"alpha_input,{i + 1},{a:.10g}")
    print(f"balance,,{res.balance:.10g}")
    print(f"max_rate_gap,,{res.max_rate_gap:.10g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run-curves":
            return _cmd_run_curves(args)
        if args.command == "run-table":
            return _cmd_run_table(args)
        if args.command == "solve-optimal":
            return _cmd_solve_optimal(args)
        if args.command == "selftest":
            return EXIT_OK if selftest.run() else EXIT_RUNTIME
        raise RuntimeError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())

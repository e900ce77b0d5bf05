"""Experiment orchestration: replications, curves, tables, CSV output.

Each (policy, replication) pair is an independent job with its own seed
derived from the base seed, the policy tag, and the replication index, so
adding or removing a policy never perturbs another policy's observation
streams.  Jobs may run on any number of worker threads; aggregation folds
results in replication order, which makes the output bytes independent of
the schedule.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from rslab.config import ExperimentConfig
from rslab.policies import Policy, RunConfig, Trajectory, run_procedure
from rslab.problems import Problem, build_problem

# Checkpoint spacing (in samples) used for curve estimation when the config
# does not choose one; tables always default to every iteration so that
# target crossings are exact.
CURVE_CHECKPOINT_SPACING = 50


@dataclass(frozen=True)
class CurvePoint:
    """Aggregated estimates at one sampling budget.

    ``alloc`` holds the mean count fraction of each tracked design, aligned
    with the config's ``tracked_designs``; None when nothing is tracked.
    """

    budget: int
    pcs: float
    eoc: float
    alloc: tuple[float, ...] | None = None


@dataclass(frozen=True)
class CurveRow:
    """One CSV row of a curve file."""

    policy: str
    budget: int
    pcs: float
    eoc: float
    design: int | None = None
    alloc_frac: float | None = None


@dataclass(frozen=True)
class TargetBudgetRow:
    """First budget at which a policy's estimated PCS reaches a target."""

    policy: Policy
    target_pcs: float
    budget: int | None


def replication_seed(base_seed: int, policy: Policy, replication: int) -> int:
    """Stable per-replication seed mixing the base seed, policy tag and index."""
    digest = hashlib.sha256(
        f"{base_seed}|{policy.value}|{replication}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "big")


def _final_total(m: int, run: RunConfig) -> int:
    init = run.n0 * m
    iters = max(0, -(-(run.budget - init) // run.delta))
    return init + iters * run.delta


def checkpoint_grid(m: int, run: RunConfig, every: int | None) -> tuple[int, ...]:
    """Checkpoint totals for a problem with m designs.

    ``every=None`` records every iteration; otherwise checkpoints sit on
    multiples of ``every`` (plus the final total so curves reach the end).
    """
    init = run.n0 * m
    final = _final_total(m, run)
    if every is None:
        return tuple(range(init, final + 1, run.delta))
    first = ((init + every - 1) // every) * every
    cps = list(range(first, final + 1, every))
    if not cps or cps[-1] != final:
        cps.append(final)
    return tuple(cps)


def _resolved_run(config: ExperimentConfig, problem: Problem, every: int | None) -> RunConfig:
    if config.run.checkpoints is not None:
        return config.run
    grid = checkpoint_grid(problem.num_designs, config.run, every)
    return replace(config.run, checkpoints=grid)


def _run_jobs(config: ExperimentConfig, problem: Problem, run: RunConfig, workers: int):
    jobs = [(policy, r) for policy in config.policies for r in range(config.replications)]

    def one(job) -> Trajectory:
        policy, r = job
        return run_procedure(problem, policy, run, replication_seed(config.base_seed, policy, r))

    if workers <= 1:
        results = [one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    by_job = {job: traj for job, traj in zip(jobs, results)}
    return by_job


def estimate_curves(
    config: ExperimentConfig, workers: int = 1
) -> list[tuple[Policy, list[CurvePoint]]]:
    """PCS / EOC / allocation curves for every configured policy.

    Deterministic for a given config regardless of ``workers``.
    """
    problem = build_problem(config.problem, seed=config.base_seed)
    every = config.checkpoint_every if config.checkpoint_every is not None else CURVE_CHECKPOINT_SPACING
    run = _resolved_run(config, problem, every)
    by_job = _run_jobs(config, problem, run, workers)

    tracked = config.tracked_designs
    reps = config.replications
    out: list[tuple[Policy, list[CurvePoint]]] = []
    for policy in config.policies:
        budgets = None
        hits = eoc = alloc = None
        for r in range(reps):
            traj = by_job[(policy, r)]
            if budgets is None:
                budgets = traj.budgets.copy()
                hits = np.zeros(len(budgets), dtype=np.int64)
                eoc = np.zeros(len(budgets), dtype=np.float64)
                if tracked is not None:
                    alloc = np.zeros((len(budgets), len(tracked)), dtype=np.float64)
            elif not np.array_equal(budgets, traj.budgets):
                raise RuntimeError("replications recorded different checkpoint totals")
            hits += traj.best == problem.best
            eoc += problem.true_means[problem.best] - problem.true_means[traj.best]
            if tracked is not None:
                alloc += traj.counts[:, tracked] / traj.budgets[:, None]
        points = [
            CurvePoint(
                budget=int(budgets[k]),
                pcs=hits[k] / reps,
                eoc=eoc[k] / reps,
                alloc=tuple(alloc[k] / reps) if tracked is not None else None,
            )
            for k in range(len(budgets))
        ]
        out.append((policy, points))
    return out


def budget_to_target(
    config: ExperimentConfig, targets, workers: int = 1
) -> list[TargetBudgetRow]:
    """First checkpoint whose Monte Carlo PCS estimate reaches each target.

    The raw estimate is used with no smoothing; checkpoints default to
    every iteration so the crossing is exact on the sampling grid.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("targets must contain at least one PCS level")
    for t in targets:
        if not (isinstance(t, (int, float)) and math.isfinite(t)):
            raise ValueError(f"invalid PCS target {t!r}")
    problem = build_problem(config.problem, seed=config.base_seed)
    run = _resolved_run(config, problem, config.checkpoint_every)
    by_job = _run_jobs(config, problem, run, workers)

    reps = config.replications
    rows: list[TargetBudgetRow] = []
    for policy in config.policies:
        budgets = by_job[(policy, 0)].budgets
        hits = np.zeros(len(budgets), dtype=np.int64)
        for r in range(reps):
            hits += by_job[(policy, r)].best == problem.best
        pcs = hits / reps
        for target in targets:
            crossing = np.nonzero(pcs >= target)[0]
            rows.append(
                TargetBudgetRow(
                    policy=policy,
                    target_pcs=float(target),
                    budget=int(budgets[crossing[0]]) if len(crossing) else None,
                )
            )
    return rows


def curve_rows(results, tracked_designs=None) -> list[CurveRow]:
    """Flatten estimate_curves output into CSV rows (designs 1-based)."""
    rows: list[CurveRow] = []
    for policy, points in results:
        for point in points:
            if point.alloc is None:
                rows.append(
                    CurveRow(policy.value, point.budget, point.pcs, point.eoc, None, None)
                )
            else:
                for design, frac in zip(tracked_designs, point.alloc):
                    rows.append(
                        CurveRow(
                            policy.value, point.budget, point.pcs, point.eoc,
                            design + 1, frac,
                        )
                    )
    return rows


_CURVE_HEADER = ["policy", "budget", "pcs", "eoc", "design", "alloc_frac"]
_TABLE_HEADER = ["policy", "target_pcs", "budget"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(rows, path, kind: str = "curves") -> None:
    """Write curve or table rows as UTF-8 CSV with fixed headers.

    ``kind`` ("curves" or "table") decides the header; it is inferred from
    the first row when rows are present.  Rows are sorted by (policy,
    budget/target, design) and floats carry 10 significant digits.
    """
    rows = list(rows)
    if rows:
        kind = "table" if isinstance(rows[0], TargetBudgetRow) else "curves"
    if kind not in ("curves", "table"):
        raise ValueError(f"kind must be 'curves' or 'table', got {kind!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if kind == "curves":
                writer.writerow(_CURVE_HEADER)
                rows.sort(key=lambda r: (r.policy, r.budget, r.design if r.design is not None else -1))
                for row in rows:
                    writer.writerow(
                        [row.policy, row.budget, _fmt(row.pcs), _fmt(row.eoc),
                         _fmt(row.design), _fmt(row.alloc_frac)]
                    )
            else:
                writer.writerow(_TABLE_HEADER)
                rows.sort(key=lambda r: (r.policy.value, r.target_pcs))
                for row in rows:
                    writer.writerow(
                        [row.policy.value, _fmt(row.target_pcs),
                         "not reached" if row.budget is None else row.budget]
                    )
    except OSError as exc:
        raise OSError(f"failed to write CSV to {path}: {exc}") from exc


def read_curve_csv(path) -> list[CurveRow]:
    """Parse a curve CSV written by write_csv (round-trip helper)."""
    rows: list[CurveRow] = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != _CURVE_HEADER:
                raise ValueError(f"unexpected curve CSV header in {path}: {header}")
            for rec in reader:
                rows.append(
                    CurveRow(
                        policy=rec[0],
                        budget=int(rec[1]),
                        pcs=float(rec[2]),
                        eoc=float(rec[3]),
                        design=int(rec[4]) if rec[4] else None,
                        alloc_frac=float(rec[5]) if rec[5] else None,
                    )
                )
    except OSError as exc:
        raise OSError(f"failed to read CSV from {path}: {exc}") from exc
    return rows

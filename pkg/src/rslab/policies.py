"""Sequential sample-allocation procedures and the run loop.

Eight policies share one loop: the three myopic procedures (allocate the
per-iteration increment to the design whose extra sample most improves the
chosen measure), their oracle variants (same rule with true means and
variances substituted into the pairwise parameters while the incumbent
best still comes from sample means), the OCBA budget-ratio rule, and Equal
Allocation.

Runs are deterministic functions of (problem, policy, config, seed): each
replication derives one observation substream per design, so observation
k of design i does not depend on the allocation order.  The loop body is
JIT-compiled; the public ``choose_next`` / ``ocba_target`` operations use
the same kernels, and replaying a recorded observation stream through them
reproduces a run's allocation sequence exactly.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from rslab.acquisition import Measure, _improvements_kernel, _measure_kernel, scaled_improvements
from rslab.problems import Problem
from rslab.special import NU_FLOOR
from rslab.state import VAR_FLOOR, AllocationState, _welford_push, estimated_best

_FAMILY_MAP = 0
_FAMILY_OCBA = 1
_FAMILY_EQUAL = 2


class Policy(enum.Enum):
    """Allocation policies; the m* variants need ground-truth parameters."""

    APCS_B = "APCS-B"
    AEOC_B = "AEOC-B"
    APCS_S = "APCS-S"
    M_APCS_B = "mAPCS-B"
    M_AEOC_B = "mAEOC-B"
    M_APCS_S = "mAPCS-S"
    OCBA = "OCBA"
    EQUAL = "EQUAL"

    @property
    def label(self) -> str:
        return self.value

    @property
    def measure(self) -> Measure | None:
        """Driving measure for the myopic family, None for OCBA/EQUAL."""
        return _POLICY_MEASURES.get(self)

    @property
    def uses_truth(self) -> bool:
        return self in (Policy.M_APCS_B, Policy.M_AEOC_B, Policy.M_APCS_S)

    @property
    def family(self) -> int:
        if self is Policy.OCBA:
            return _FAMILY_OCBA
        if self is Policy.EQUAL:
            return _FAMILY_EQUAL
        return _FAMILY_MAP


_POLICY_MEASURES = {
    Policy.APCS_B: Measure.APCS_B,
    Policy.AEOC_B: Measure.AEOC_B,
    Policy.APCS_S: Measure.APCS_S,
    Policy.M_APCS_B: Measure.APCS_B,
    Policy.M_AEOC_B: Measure.AEOC_B,
    Policy.M_APCS_S: Measure.APCS_S,
}


def parse_policy(name: str) -> Policy:
    """Resolve a user-facing policy name (case- and separator-insensitive)."""
    key = name.strip().replace("-", "_").upper()
    for policy in Policy:
        if key in (policy.name, policy.value.replace("-", "_").upper()):
            return policy
    raise ValueError(f"unknown policy {name!r}; expected one of "
                     + ", ".join(p.value for p in Policy))


@dataclass(frozen=True)
class RunConfig:
    """Run-loop parameters shared by all policies.

    ``checkpoints`` are total sample counts at which the state is recorded;
    None lets the caller (or the run itself) pick a default.
    """

    budget: int
    n0: int = 2
    delta: int = 1
    checkpoints: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError(f"n0 must be at least 2, got {self.n0}")
        if self.n0 == 2:
            warnings.warn(
                "n0=2 gives Welch degrees of freedom near 1 early on; the "
                "loss-function clamp will activate frequently",
                RuntimeWarning,
                stacklevel=2,
            )
        if self.delta < 1:
            raise ValueError(f"delta must be at least 1, got {self.delta}")
        if self.budget < 2 * self.n0:
            raise ValueError(f"budget {self.budget} cannot cover n0={self.n0} for 2 designs")
        if self.checkpoints is not None:
            cps = tuple(int(c) for c in self.checkpoints)
            if list(cps) != sorted(set(cps)):
                raise ValueError("checkpoints must be strictly increasing")
            if cps and cps[-1] > self.budget:
                raise ValueError(f"checkpoint {cps[-1]} exceeds budget {self.budget}")
            object.__setattr__(self, "checkpoints", cps)


@dataclass(frozen=True)
class Trajectory:
    """Per-checkpoint records of one run."""

    policy: Policy
    budgets: np.ndarray
    iterations: np.ndarray
    counts: np.ndarray
    best: np.ndarray
    measure: np.ndarray

    @property
    def num_checkpoints(self) -> int:
        return len(self.budgets)


def ocba_target(means, sds, best: int, total: float) -> np.ndarray:
    """Budget-ratio targets: competitor shares proportional to
    sds^2 / gap^2 and the best design balancing the competitors'
    weighted squares; scaled to sum to ``total``."""
    means = np.asarray(means, dtype=np.float64)
    sds = np.asarray(sds, dtype=np.float64)
    if means.shape != sds.shape or means.ndim != 1 or len(means) < 2:
        raise ValueError("means and sds must be equal-length 1-d sequences (length >= 2)")
    if (sds <= 0).any():
        raise ValueError("all standard deviations must be positive")
    if not 0 <= best < len(means):
        raise ValueError(f"best index {best} out of range")
    if means.max() > means[best]:
        raise ValueError(f"means attain their max at {int(np.argmax(means))}, not at best={best}")
    if total <= 0:
        raise ValueError(f"total must be positive, got {total}")
    out = np.empty(len(means), dtype=np.float64)
    _ocba_targets_kernel(means, sds, best, float(total), out)
    return out


@njit(cache=True, nogil=True)
def _ocba_targets_kernel(means, sds, best, total, out):
    m = means.shape[0]
    gap_floor = 1e-9 * (1.0 + abs(means[best]))
    acc = 0.0
    for i in range(m):
        if i == best:
            continue
        gap = abs(means[best] - means[i])
        if gap < gap_floor:
            gap = gap_floor
        w = sds[i] * sds[i] / (gap * gap)
        out[i] = w
        acc += (w / sds[i]) ** 2
    out[best] = sds[best] * math.sqrt(acc)
    norm = 0.0
    for i in range(m):
        norm += out[i]
    scale = total / norm
    for i in range(m):
        out[i] *= scale


@njit(cache=True, nogil=True)
def _argmax_first(values):
    best = 0
    top = values[0]
    for i in range(1, values.shape[0]):
        if values[i] > top:
            top = values[i]
            best = i
    return best


@njit(cache=True, nogil=True)
def _clamped_variances(counts, m2, out):
    for i in range(counts.shape[0]):
        v = m2[i] / (counts[i] - 1.0)
        if v < VAR_FLOOR:
            v = VAR_FLOOR
        out[i] = v


def choose_next(kind: Policy, state: AllocationState, truth=None) -> int:
    """Design the policy would sample next (0-based).

    ``truth`` is a (true_means, true_sds) pair; it is required for the m*
    oracle variants, optional for OCBA (true-parameter plug-in), and
    rejected for the purely sample-driven policies.
    """
    if (state.counts < 2).any():
        raise ValueError("choose_next needs at least 2 observations per design")
    if truth is not None and not (kind.uses_truth or kind is Policy.OCBA):
        raise ValueError(f"policy {kind.value} does not take ground-truth parameters")
    if kind.uses_truth and truth is None:
        raise ValueError(f"policy {kind.value} requires ground-truth parameters")

    if kind is Policy.EQUAL:
        return int(np.argmin(state.counts))

    if kind is Policy.OCBA:
        if truth is not None:
            means = np.asarray(truth[0], dtype=np.float64)
            sds = np.asarray(truth[1], dtype=np.float64)
            best = int(np.argmax(means))
        else:
            means = state.means
            sds = np.sqrt(state.variances())
            best = estimated_best(state)
        targets = ocba_target(means, sds, best, state.total + 1)
        return int(np.argmax(targets - state.counts))

    best = estimated_best(state)
    if kind.uses_truth:
        means = np.asarray(truth[0], dtype=np.float64)
        variances = np.asarray(truth[1], dtype=np.float64) ** 2
    else:
        means = state.means
        variances = state.variances()
    vec, _ = scaled_improvements(kind.measure, state.counts, means, variances, best)
    return int(np.argmax(vec))


@njit(cache=True, nogil=True)
def _record_checkpoint(
    idx, total, iteration, counts, means, m2,
    family, measure_code, use_truth, true_means, true_vars,
    cp_totals, cp_iterations, cp_counts, cp_best, cp_measure,
):
    m = counts.shape[0]
    cp_totals[idx] = total
    cp_iterations[idx] = iteration
    best = _argmax_first(means)
    cp_best[idx] = best
    for i in range(m):
        cp_counts[idx, i] = counts[i]
    if family == _FAMILY_MAP:
        if use_truth:
            cp_measure[idx] = _measure_kernel(measure_code, counts, true_means, true_vars, best, NU_FLOOR)
        else:
            variances = np.empty(m, dtype=np.float64)
            _clamped_variances(counts, m2, variances)
            cp_measure[idx] = _measure_kernel(measure_code, counts, means, variances, best, NU_FLOOR)
    else:
        cp_measure[idx] = np.nan


@njit(cache=True, nogil=True)
def _run_kernel(
    obs, n0, delta, budget, checkpoints,
    family, measure_code, use_truth, true_means, true_vars, true_sds, true_best,
    cp_totals, cp_iterations, cp_counts, cp_best, cp_measure,
):
    m = obs.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    means = np.zeros(m, dtype=np.float64)
    m2 = np.zeros(m, dtype=np.float64)
    variances = np.empty(m, dtype=np.float64)
    impr = np.empty(m, dtype=np.float64)
    targets = np.empty(m, dtype=np.float64)

    for i in range(m):
        for k in range(n0):
            c, mu, s2 = _welford_push(counts[i], means[i], m2[i], obs[i, k])
            counts[i] = c
            means[i] = mu
            m2[i] = s2
    total = n0 * m
    iteration = 0
    ncp = checkpoints.shape[0]
    cp = 0
    while cp < ncp and checkpoints[cp] <= total:
        _record_checkpoint(
            cp, total, iteration, counts, means, m2,
            family, measure_code, use_truth, true_means, true_vars,
            cp_totals, cp_iterations, cp_counts, cp_best, cp_measure,
        )
        cp += 1

    while total < budget:
        if family == _FAMILY_EQUAL:
            j = 0
            low = counts[0]
            for i in range(1, m):
                if counts[i] < low:
                    low = counts[i]
                    j = i
            for _ in range(delta):
                w = obs[j, counts[j]]
                c, mu, s2 = _welford_push(counts[j], means[j], m2[j], w)
                counts[j] = c
                means[j] = mu
                m2[j] = s2
                total += 1
        elif family == _FAMILY_OCBA:
            if use_truth:
                _ocba_targets_kernel(true_means, true_sds, true_best, float(total + delta), targets)
            else:
                best = _argmax_first(means)
                for i in range(m):
                    v = m2[i] / (counts[i] - 1.0)
                    if v < VAR_FLOOR:
                        v = VAR_FLOOR
                    variances[i] = math.sqrt(v)
                _ocba_targets_kernel(means, variances, best, float(total + delta), targets)
            # The increment goes one sample at a time to the currently most
            # deficient design under the fixed targets.
            for _ in range(delta):
                j = 0
                deficit = targets[0] - counts[0]
                for i in range(1, m):
                    di = targets[i] - counts[i]
                    if di > deficit:
                        deficit = di
                        j = i
                w = obs[j, counts[j]]
                c, mu, s2 = _welford_push(counts[j], means[j], m2[j], w)
                counts[j] = c
                means[j] = mu
                m2[j] = s2
                total += 1
        else:
            best = _argmax_first(means)
            if use_truth:
                _improvements_kernel(measure_code, counts, true_means, true_vars, best, NU_FLOOR, impr)
            else:
                _clamped_variances(counts, m2, variances)
                _improvements_kernel(measure_code, counts, means, variances, best, NU_FLOOR, impr)
            j = _argmax_first(impr)
            for _ in range(delta):
                w = obs[j, counts[j]]
                c, mu, s2 = _welford_push(counts[j], means[j], m2[j], w)
                counts[j] = c
                means[j] = mu
                m2[j] = s2
                total += 1
        iteration += 1
        while cp < ncp and checkpoints[cp] <= total:
            _record_checkpoint(
                cp, total, iteration, counts, means, m2,
                family, measure_code, use_truth, true_means, true_vars,
                cp_totals, cp_iterations, cp_counts, cp_best, cp_measure,
            )
            cp += 1


def run_procedure(
    problem: Problem,
    kind: Policy,
    config: RunConfig,
    seed,
    inject_truth: bool = False,
) -> Trajectory:
    """Run one replication of a policy and record it at the checkpoints.

    ``seed`` may be an integer or a numpy SeedSequence.  ``inject_truth``
    switches OCBA to its true-parameter plug-in form; the m* variants use
    ground truth regardless.
    """
    m = problem.num_designs
    if m < 2:
        raise ValueError(f"need at least 2 designs, got {m}")
    init_total = config.n0 * m
    if config.budget < init_total:
        raise ValueError(
            f"budget {config.budget} is below the initialization total n0*M = {init_total}"
        )
    if inject_truth and not (kind is Policy.OCBA or kind.uses_truth):
        raise ValueError(f"policy {kind.value} has no true-parameter form")

    iters = max(0, -(-(config.budget - init_total) // config.delta))
    final_total = init_total + iters * config.delta
    checkpoints = config.checkpoints if config.checkpoints is not None else (final_total,)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if len(checkpoints) and checkpoints[0] < init_total:
        raise ValueError(
            f"checkpoint {int(checkpoints[0])} precedes the initialization total {init_total}"
        )

    max_per_design = final_total - (m - 1) * config.n0
    obs = problem.observation_matrix(seed, max_per_design)

    use_truth = kind.uses_truth or (inject_truth and kind is Policy.OCBA)
    measure = kind.measure
    measure_code = measure.code if measure is not None else -1

    k = len(checkpoints)
    cp_totals = np.zeros(k, dtype=np.int64)
    cp_iterations = np.zeros(k, dtype=np.int64)
    cp_counts = np.zeros((k, m), dtype=np.int64)
    cp_best = np.zeros(k, dtype=np.int64)
    cp_measure = np.zeros(k, dtype=np.float64)

    _run_kernel(
        obs,
        config.n0,
        config.delta,
        config.budget,
        checkpoints,
        kind.family,
        measure_code,
        use_truth,
        problem.true_means,
        problem.true_sds**2,
        problem.true_sds,
        problem.best,
        cp_totals,
        cp_iterations,
        cp_counts,
        cp_best,
        cp_measure,
    )
    return Trajectory(
        policy=kind,
        budgets=cp_totals,
        iterations=cp_iterations,
        counts=cp_counts,
        best=cp_best,
        measure=cp_measure,
    )

"""Selection-quality measures and their one-step lookahead improvements.

Three approximations of the posterior selection quality are supported,
each built from the pairwise Welch parameters between every competitor and
the incumbent best design:

* APCS-B: Bonferroni lower bound on the probability of correct selection,
  ``1 - sum_i cdf(-d_i)``.  Not clipped, so it can go negative when many
  competitors are close.
* AEOC-B: Bonferroni upper bound on the expected opportunity cost,
  ``sum_i sqrt(s_i) * psi(d_i)``.
* APCS-S: Slepian product lower bound on the probability of correct
  selection, ``prod_i cdf(d_i)``.

The improvement vector evaluates, for every design j, how much the measure
would improve if j received one more sample: counts are bumped, means and
variances held fixed, and the incumbent best is not re-estimated.  For
AEOC-B "improvement" means reduction of the bound.

All pairwise terms are carried in log space and improvement differences
are formed after rescaling by the largest term.  At large budgets the
selection-error tails fall far below the smallest double (magnitudes like
exp(-1e4)), and forming the differences in plain probability space would
round every entry to zero and destroy the allocation ranking.  The public
improvement vectors are the rescaled differences mapped back to linear
scale, so entries may underflow to zero individually, but the argmax used
by the procedures is always the exact-arithmetic one.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from numba import njit

from rslab.special import NU_FLOOR, _psi_log, _t_logcdf
from rslab.state import AllocationState, estimated_best

# Scaled-difference entries lose exact algebraic form only for the
# APCS-S best-design entry; below this log-magnitude the first-order
# product expansion is exact to double precision.
_DEEP_LOG = -700.0


class Measure(enum.Enum):
    """Tags for the three approximation measures."""

    APCS_B = "APCS-B"
    AEOC_B = "AEOC-B"
    APCS_S = "APCS-S"

    @property
    def label(self) -> str:
        return self.value

    @property
    def code(self) -> int:
        return _MEASURE_CODES[self]


_MEASURE_CODES = {Measure.APCS_B: 0, Measure.AEOC_B: 1, Measure.APCS_S: 2}


@njit(cache=True, nogil=True)
def _pair_log_term(
    kind: int,
    var_i: float,
    n_i: float,
    df_i: float,
    var_b: float,
    n_b: float,
    df_b: float,
    gap: float,
    nu_floor: float,
) -> float:
    """Log of one (competitor, best) pair's contribution to a measure.

    APCS-B and APCS-S share the log posterior tail probability; AEOC-B is
    the log of the scaled expected-shortfall loss.
    """
    term_i = var_i / n_i
    term_b = var_b / n_b
    s = term_i + term_b
    nu = s * s / (term_i * term_i / df_i + term_b * term_b / df_b)
    d = gap / math.sqrt(s)
    if kind == 1:
        if nu < nu_floor:
            nu = nu_floor
        return 0.5 * math.log(s) + _psi_log(nu, d)
    return _t_logcdf(nu, -d)


@njit(cache=True, nogil=True)
def _safe_tail(log_tail: float) -> float:
    """Linear tail from its log, kept strictly below 1 for log1p."""
    t = math.exp(log_tail)
    if t >= 1.0:
        t = 1.0 - 1e-16
    return t


@njit(cache=True, nogil=True)
def _measure_kernel(kind, counts, means, variances, best, nu_floor) -> float:
    m = counts.shape[0]
    var_b = variances[best]
    n_b = float(counts[best])
    if kind == 2 and m > 2:
        acc = 0.0
        for i in range(m):
            if i == best:
                continue
            n_i = float(counts[i])
            lt = _pair_log_term(
                kind,
                variances[i], n_i, n_i - 1.0,
                var_b, n_b, n_b - 1.0,
                means[best] - means[i],
                nu_floor,
            )
            acc += math.log1p(-_safe_tail(lt))
        return math.exp(acc)
    acc = 0.0
    for i in range(m):
        if i == best:
            continue
        n_i = float(counts[i])
        lt = _pair_log_term(
            kind,
            variances[i], n_i, n_i - 1.0,
            var_b, n_b, n_b - 1.0,
            means[best] - means[i],
            nu_floor,
        )
        acc += math.exp(lt)
    if kind == 1:
        return acc
    # Bonferroni and the single-competitor Slepian case share 1 - sum,
    # which keeps the two bounds bit-identical for two designs.
    return 1.0 - acc


@njit(cache=True, nogil=True)
def _improvements_kernel(kind, counts, means, variances, best, nu_floor, out) -> float:
    """Fill ``out`` with improvements rescaled by exp(-mstar); returns mstar.

    ``mstar`` is the largest pairwise log term over the current state and
    both lookahead bumps; multiplying ``out`` by exp(mstar) recovers the
    plain improvement values.
    """
    m = counts.shape[0]
    cur = np.empty(m, dtype=np.float64)
    own = np.empty(m, dtype=np.float64)
    bb = np.empty(m, dtype=np.float64)
    var_b = variances[best]
    n_b = float(counts[best])
    mstar = -np.inf
    for i in range(m):
        if i == best:
            cur[i] = 0.0
            own[i] = 0.0
            bb[i] = 0.0
            continue
        n_i = float(counts[i])
        gap = means[best] - means[i]
        l0 = _pair_log_term(
            kind, variances[i], n_i, n_i - 1.0, var_b, n_b, n_b - 1.0, gap, nu_floor
        )
        l1 = _pair_log_term(
            kind, variances[i], n_i + 1.0, n_i, var_b, n_b, n_b - 1.0, gap, nu_floor
        )
        l2 = _pair_log_term(
            kind, variances[i], n_i, n_i - 1.0, var_b, n_b + 1.0, n_b, gap, nu_floor
        )
        cur[i] = l0
        own[i] = l1
        bb[i] = l2
        if l0 > mstar:
            mstar = l0
        if l1 > mstar:
            mstar = l1
        if l2 > mstar:
            mstar = l2

    if kind != 2:
        acc_best = 0.0
        for i in range(m):
            if i == best:
                continue
            e0 = math.exp(cur[i] - mstar)
            out[i] = e0 - math.exp(own[i] - mstar)
            acc_best += e0 - math.exp(bb[i] - mstar)
        out[best] = acc_best
        return mstar

    # Slepian product: improvement_j factors into the unchanged terms times
    # the tail difference of the bumped pair.
    logphi = np.empty(m, dtype=np.float64)
    log_base = 0.0
    for i in range(m):
        if i == best:
            logphi[i] = 0.0
            continue
        logphi[i] = math.log1p(-_safe_tail(cur[i]))
        log_base += logphi[i]
    base = math.exp(log_base)
    for j in range(m):
        if j == best:
            continue
        pref = math.exp(log_base - logphi[j])
        out[j] = pref * (math.exp(cur[j] - mstar) - math.exp(own[j] - mstar))
    if mstar > _DEEP_LOG:
        delta = 0.0
        for i in range(m):
            if i == best:
                continue
            delta += math.log1p(-_safe_tail(bb[i])) - logphi[i]
        out[best] = base * math.expm1(delta) * math.exp(-mstar)
    else:
        acc = 0.0
        for i in range(m):
            if i == best:
                continue
            acc += math.exp(cur[i] - mstar) - math.exp(bb[i] - mstar)
        out[best] = base * acc
    return mstar


def scaled_improvements(
    kind: Measure,
    counts: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    best: int,
) -> tuple[np.ndarray, float]:
    """Improvement vector times exp(-log_scale), plus the log scale.

    The rescaled vector has the same argmax as the true improvements but
    stays representable when the true values underflow; procedures rank
    candidates with it.
    """
    counts = np.asarray(counts, dtype=np.int64)
    out = np.empty(len(counts), dtype=np.float64)
    mstar = _improvements_kernel(
        kind.code,
        counts,
        np.asarray(means, dtype=np.float64),
        np.asarray(variances, dtype=np.float64),
        best,
        NU_FLOOR,
        out,
    )
    return out, float(mstar)


def measure_from_arrays(
    kind: Measure,
    counts: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    best: int,
) -> float:
    """Measure value from raw arrays; lets callers substitute true parameters."""
    return float(
        _measure_kernel(
            kind.code,
            np.asarray(counts, dtype=np.int64),
            np.asarray(means, dtype=np.float64),
            np.asarray(variances, dtype=np.float64),
            best,
            NU_FLOOR,
        )
    )


def improvements_from_arrays(
    kind: Measure,
    counts: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    best: int,
) -> np.ndarray:
    """Improvement vector from raw arrays; one entry per candidate design."""
    out, mstar = scaled_improvements(kind, counts, means, variances, best)
    return out * math.exp(mstar)


def apcs_b(state: AllocationState) -> float:
    """Bonferroni lower bound on the probability of correct selection."""
    best = estimated_best(state)
    return measure_from_arrays(Measure.APCS_B, state.counts, state.means, state.variances(), best)


def aeoc_b(state: AllocationState) -> float:
    """Bonferroni upper bound on the expected opportunity cost."""
    best = estimated_best(state)
    return measure_from_arrays(Measure.AEOC_B, state.counts, state.means, state.variances(), best)


def apcs_s(state: AllocationState) -> float:
    """Slepian product lower bound on the probability of correct selection."""
    best = estimated_best(state)
    return measure_from_arrays(Measure.APCS_S, state.counts, state.means, state.variances(), best)


def measure_value(kind: Measure, state: AllocationState) -> float:
    """Value of the requested measure at the current state."""
    best = estimated_best(state)
    return measure_from_arrays(kind, state.counts, state.means, state.variances(), best)


def improvements(kind: Measure, state: AllocationState) -> np.ndarray:
    """One-step lookahead improvement of the measure for every design.

    Entry j is ``measure_after_sampling_j - measure`` for APCS-B / APCS-S
    and ``measure - measure_after_sampling_j`` for AEOC-B, with the
    incumbent best frozen during the lookahead.  Entries whose true
    magnitude lies below the smallest double come back as zero; use
    ``scaled_improvements`` to rank candidates in that regime.
    """
    best = estimated_best(state)
    return improvements_from_arrays(kind, state.counts, state.means, state.variances(), best)

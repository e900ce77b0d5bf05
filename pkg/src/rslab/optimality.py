"""Asymptotically optimal sample allocation and convergence diagnostics.

For normal sampling the asymptotic decay rate of the false-selection
probability under allocation fractions ``alpha`` is governed per
competitor by ``tau_i = gap_i^2 / (sds_i^2/alpha_i + sds_b^2/alpha_b)``.
The optimal fractions equalize all competitor rates and balance the best
design's share against the competitors:

    (alpha_b / sds_b)^2 = sum_{i != b} (alpha_i / sds_i)^2.

``solve_optimal_allocation`` solves these conditions; ``residuals``
evaluates how far an arbitrary allocation is from satisfying them, which
is the convergence diagnostic used on empirical run trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Named solver tolerances.
RESIDUAL_TOL = 1e-10
SIMPLEX_TOL = 1e-12
_FIXED_POINT_ROUNDS = 200
_FIXED_POINT_TOL = 1e-14


@dataclass(frozen=True)
class OptimalAllocation:
    """Optimal budget fractions (summing to 1) and the best design index."""

    alpha: np.ndarray
    best: int


@dataclass(frozen=True)
class Residuals:
    """How far an allocation is from the optimality conditions.

    ``balance`` is the signed balance-equation residual; ``max_rate_gap``
    is the largest pairwise competitor-rate difference relative to the mean
    competitor rate (0 for a single competitor).
    """

    balance: float
    max_rate_gap: float


def _validate_instance(means, sds, require_unique_best: bool = True):
    means = np.asarray(means, dtype=np.float64)
    sds = np.asarray(sds, dtype=np.float64)
    if means.ndim != 1 or means.shape != sds.shape:
        raise ValueError("means and sds must be 1-d sequences of equal length")
    if len(means) < 2:
        raise ValueError(f"need at least 2 designs, got {len(means)}")
    if not (np.isfinite(means).all() and np.isfinite(sds).all()):
        raise ValueError("means and sds must be finite")
    if (sds <= 0).any():
        raise ValueError("all standard deviations must be positive")
    if require_unique_best and (means == means.max()).sum() != 1:
        raise ValueError("best mean is not unique")
    return means, sds


def pair_rate(means, sds, alpha, i: int, b: int) -> float:
    """Competitor rate tau_i of pair (i, b) under allocation ``alpha``.

    ``alpha`` may be fractions or raw counts; the rate scales linearly with
    the overall scale of ``alpha``.
    """
    means, sds = _validate_instance(means, sds, require_unique_best=False)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != means.shape:
        raise ValueError("alpha must have one entry per design")
    if i == b:
        raise ValueError(f"pair rate needs distinct designs, got i = b = {i}")
    if alpha[i] <= 0 or alpha[b] <= 0:
        raise ValueError("pair rate needs positive allocations for both designs")
    gap = means[b] - means[i]
    return float(gap * gap / (sds[i] ** 2 / alpha[i] + sds[b] ** 2 / alpha[b]))


def min_rate(means, sds, alpha, best: int | None = None) -> float:
    """Smallest competitor rate; the objective the optimal allocation maximizes."""
    means = np.asarray(means, dtype=np.float64)
    if best is None:
        best = int(np.argmax(means))
    return min(
        pair_rate(means, sds, alpha, i, best) for i in range(len(means)) if i != best
    )


def _competitor_alphas(tau, alpha_b, gaps2, sds2, sd_b2):
    """Per-competitor fractions solving tau_i = tau at the given alpha_b."""
    denom = gaps2 / tau - sd_b2 / alpha_b
    if (denom <= 0).any():
        return None
    return sds2 / denom

def _solve_alpha_b(tau, gaps2, sds, sds2, sd_b, sd_b2):
    """Best-design fraction solving the balance equation at a rate level.

    A damped fixed point is tried first; acceptance is on the actual
    balance residual, not the step size.  The balance map is strictly
    decreasing in the best-design fraction, so when the fixed point fails
    to contract (it cycles when the map is steep, e.g. for a large
    best-design variance) the same root is found by plain bisection.
    """
    lower = sd_b2 * tau / gaps2.min()

    def balance_target(x):
        alphas = _competitor_alphas(tau, x, gaps2, sds2, sd_b2)
        if alphas is None:
            return None
        return sd_b * math.sqrt(float(np.sum((alphas / sds) ** 2)))

    x = lower * 2.0
    for _ in range(_FIXED_POINT_ROUNDS):
        target = balance_target(x)
        if target is None:
            x = 2.0 * x
            continue
        if abs(target - x) <= _FIXED_POINT_TOL * max(1.0, x):
            return x
        x_new = 0.5 * (x + target)
        if x_new <= lower:
            x_new = 0.5 * (x + lower)
        x = x_new

    lo = lower * (1.0 + 1e-13) + 1e-300
    hi = max(4.0 * lower, 1.0)
    target = balance_target(hi)
    grow = 0
    while target is not None and target > hi and grow < 200:
        hi *= 2.0
        target = balance_target(hi)
        grow += 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        target = balance_target(mid)
        if target is None or target > mid:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    x = 0.5 * (lo + hi)
    target = balance_target(x)
    if target is None or abs(target - x) > 1e-9 * max(1.0, x):
        return None
    return x


def solve_optimal_allocation(means, sds) -> OptimalAllocation:
    """Solve the rate-equality plus balance conditions for ``alpha``.

    Outer bisection on the common competitor rate level; for each level the
    competitor fractions follow in closed form from a candidate best-design
    fraction, which is itself pinned down by the balance equation.  The
    rate level is adjusted until the fractions sum to one.
    """
    means, sds = _validate_instance(means, sds)
    m = len(means)
    best = int(np.argmax(means))

    if m == 2:
        i = 1 - best
        alpha = np.empty(2, dtype=np.float64)
        alpha[i] = sds[i] / (sds[i] + sds[best])
        alpha[best] = sds[best] / (sds[i] + sds[best])
        return OptimalAllocation(alpha=alpha, best=best)

    others = np.array([i for i in range(m) if i != best])
    gaps2 = (means[best] - means[others]) ** 2
    sds_o = sds[others]
    sds2_o = sds_o**2
    sd_b = float(sds[best])
    sd_b2 = sd_b * sd_b

    def total_mass(tau):
        alpha_b = _solve_alpha_b(tau, gaps2, sds_o, sds2_o, sd_b, sd_b2)
        if alpha_b is None:
            return None, None, None
        alphas = _competitor_alphas(tau, alpha_b, gaps2, sds2_o, sd_b2)
        return float(alpha_b + alphas.sum()), alpha_b, alphas

    # Bracket the rate level at which the fractions sum to one.
    tau_hi = float(gaps2.min() / (m * (sds2_o.max() + sd_b2)))
    mass, _, _ = total_mass(tau_hi)
    tries = 0
    while mass is not None and mass < 1.0 and tries < 200:
        tau_hi *= 2.0
        mass, _, _ = total_mass(tau_hi)
        tries += 1
    tau_lo = tau_hi
    tries = 0
    while tries < 400:
        tau_lo *= 0.5
        mass, _, _ = total_mass(tau_lo)
        if mass is not None and mass < 1.0:
            break
        tries += 1
    else:
        return _refine_fallback(means, sds, best)

    alpha_b_final = None
    alphas_final = None
    for _ in range(400):
        tau_mid = 0.5 * (tau_lo + tau_hi)
        mass, alpha_b, alphas = total_mass(tau_mid)
        if mass is None:
            return _refine_fallback(means, sds, best)
        if abs(mass - 1.0) <= SIMPLEX_TOL:
            alpha_b_final, alphas_final = alpha_b, alphas
            break
        if mass < 1.0:
            tau_lo = tau_mid
        else:
            tau_hi = tau_mid
        alpha_b_final, alphas_final = alpha_b, alphas
        if tau_hi - tau_lo <= 1e-17 * tau_hi:
            break

    alpha = np.empty(m, dtype=np.float64)
    alpha[best] = alpha_b_final
    alpha[others] = alphas_final
    alpha /= alpha.sum()
    return OptimalAllocation(alpha=alpha, best=best)


def _refine_fallback(means, sds, best: int) -> OptimalAllocation:
    """Guaranteed-terminating pattern search on the simplex.

    The minimum competitor rate is concave in the fractions, so shrinking
    pairwise mass transfers from any interior start converge to the global
    maximizer; used only when the fixed point fails to contract.
    """
    m = len(means)
    alpha = np.full(m, 1.0 / m)
    value = min_rate(means, sds, alpha, best)
    step = 0.25
    while step > 1e-13:
        improved = False
        for src in range(m):
            for dst in range(m):
                if src == dst or alpha[src] <= step:
                    continue
                trial = alpha.copy()
                trial[src] -= step
                trial[dst] += step
                trial_value = min_rate(means, sds, trial, best)
                if trial_value > value:
                    alpha, value = trial, trial_value
                    improved = True
        if not improved:
            step *= 0.5
    return OptimalAllocation(alpha=alpha / alpha.sum(), best=best)


def residuals(counts_or_alpha, means, sds) -> Residuals:
    """Optimality-condition residuals of an allocation (counts or fractions)."""
    means, sds = _validate_instance(means, sds)
    alpha = np.asarray(counts_or_alpha, dtype=np.float64)
    if alpha.shape != means.shape:
        raise ValueError("allocation must have one entry per design")
    if (alpha <= 0).any():
        raise ValueError("residuals need strictly positive allocation for every design")
    alpha = alpha / alpha.sum()
    best = int(np.argmax(means))
    balance = float(
        (alpha[best] / sds[best]) ** 2
        - sum((alpha[i] / sds[i]) ** 2 for i in range(len(means)) if i != best)
    )
    taus = [pair_rate(means, sds, alpha, i, best) for i in range(len(means)) if i != best]
    if len(taus) < 2:
        gap = 0.0
    else:
        gap = (max(taus) - min(taus)) / (sum(taus) / len(taus))
    return Residuals(balance=balance, max_rate_gap=float(gap))

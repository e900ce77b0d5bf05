"""Streaming per-design statistics and the shared allocation state.

Observations arrive one at a time; means and centered second moments
(``m2``) are maintained with Welford's single-pass recurrence so variances
stay accurate over long runs.  The pairwise parameters of the posterior
difference between a competitor and the incumbent best follow the
Welch-Satterthwaite approximation, in both the current-state form and the
one-step lookahead form in which one design's count is hypothetically
bumped while means and variances stay fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# Sample variances are clamped below before entering any pairwise formula;
# identical early observations would otherwise give s = 0 and d = inf.
VAR_FLOOR = 1e-12


@dataclass
class DesignStats:
    """Count, running mean and sum of squared deviations for one design."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def variance(self) -> float:
        """Unbiased sample variance; defined only once count >= 2."""
        if self.count < 2:
            raise ValueError(f"variance needs at least 2 observations, have {self.count}")
        return self.m2 / (self.count - 1)


def update_stats(stats: DesignStats, observation: float) -> DesignStats:
    """Return a new DesignStats with one more observation folded in."""
    observation = float(observation)
    if not math.isfinite(observation):
        raise ValueError(f"observation must be finite, got {observation!r}")
    count = stats.count + 1
    delta = observation - stats.mean
    mean = stats.mean + delta / count
    m2 = stats.m2 + delta * (observation - mean)
    return DesignStats(count=count, mean=mean, m2=m2)


@njit(cache=True, nogil=True)
def _welford_push(count: int, mean: float, m2: float, w: float):
    """Jitted twin of update_stats; must stay expression-for-expression equal."""
    count = count + 1
    delta = w - mean
    mean = mean + delta / count
    m2 = m2 + delta * (w - mean)
    return count, mean, m2


@dataclass
class AllocationState:
    """All designs' statistics plus the iteration index of the run loop.

    Backed by flat arrays so the jitted allocation kernels can operate on
    the same storage without conversion.
    """

    counts: np.ndarray
    means: np.ndarray
    m2: np.ndarray
    iteration: int = 0

    @classmethod
    def empty(cls, num_designs: int) -> "AllocationState":
        if num_designs < 2:
            raise ValueError(f"need at least 2 designs, got {num_designs}")
        return cls(
            counts=np.zeros(num_designs, dtype=np.int64),
            means=np.zeros(num_designs, dtype=np.float64),
            m2=np.zeros(num_designs, dtype=np.float64),
        )

    @classmethod
    def from_design_stats(cls, designs: list[DesignStats], iteration: int = 0) -> "AllocationState":
        if len(designs) < 2:
            raise ValueError(f"need at least 2 designs, got {len(designs)}")
        return cls(
            counts=np.array([d.count for d in designs], dtype=np.int64),
            means=np.array([d.mean for d in designs], dtype=np.float64),
            m2=np.array([d.m2 for d in designs], dtype=np.float64),
            iteration=iteration,
        )

    @property
    def num_designs(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def designs(self) -> list[DesignStats]:
        return [
            DesignStats(int(self.counts[i]), float(self.means[i]), float(self.m2[i]))
            for i in range(self.num_designs)
        ]

    def design(self, i: int) -> DesignStats:
        return DesignStats(int(self.counts[i]), float(self.means[i]), float(self.m2[i]))

    def observe(self, i: int, observation: float) -> None:
        """Fold one observation of design i into the running statistics."""
        observation = float(observation)
        if not math.isfinite(observation):
            raise ValueError(f"observation must be finite, got {observation!r}")
        c, m, s = _welford_push(self.counts[i], self.means[i], self.m2[i], observation)
        self.counts[i] = c
        self.means[i] = m
        self.m2[i] = s

    def variances(self) -> np.ndarray:
        """Clamped sample variances of all designs (counts must be >= 2)."""
        if (self.counts < 2).any():
            raise ValueError("all designs need at least 2 observations for variances")
        return np.maximum(self.m2 / (self.counts - 1), VAR_FLOOR)


@dataclass(frozen=True)
class PairwiseParams:
    """Posterior-difference parameters for one (competitor, best) pair.

    ``s`` is the variance of the difference, ``d`` the standardized gap and
    ``nu`` the Welch-Satterthwaite degrees of freedom.
    """

    s: float
    d: float
    nu: float


@njit(cache=True, nogil=True)
def _pair_params(
    var_i: float,
    n_i: float,
    df_i: float,
    var_b: float,
    n_b: float,
    df_b: float,
    gap: float,
):
    """Shared (s, d, nu) kernel; lookahead differs only in n and df inputs."""
    term_i = var_i / n_i
    term_b = var_b / n_b
    s = term_i + term_b
    nu = s * s / (term_i * term_i / df_i + term_b * term_b / df_b)
    d = gap / math.sqrt(s)
    return s, d, nu


def estimated_best(state: AllocationState) -> int:
    """Index (0-based) of the lowest design attaining the max sample mean."""
    if (state.counts < 1).any():
        empty = int(np.argmax(state.counts < 1))
        raise ValueError(f"design {empty} has no observations yet")
    return int(np.argmax(state.means))


def _check_pair(state: AllocationState, i: int, b: int) -> None:
    if i == b:
        raise ValueError(f"pairwise parameters need distinct designs, got i = b = {i}")
    for idx in (i, b):
        if state.counts[idx] < 2:
            raise ValueError(
                f"design {idx} has {state.counts[idx]} observations; need at least 2"
            )


def pairwise_params(state: AllocationState, i: int, b: int) -> PairwiseParams:
    """Welch parameters of the posterior difference between designs i and b."""
    _check_pair(state, i, b)
    n_i = float(state.counts[i])
    n_b = float(state.counts[b])
    var_i = max(state.m2[i] / (n_i - 1.0), VAR_FLOOR)
    var_b = max(state.m2[b] / (n_b - 1.0), VAR_FLOOR)
    gap = float(state.means[b] - state.means[i])
    s, d, nu = _pair_params(var_i, n_i, n_i - 1.0, var_b, n_b, n_b - 1.0, gap)
    return PairwiseParams(s=s, d=d, nu=nu)


def lookahead_params(state: AllocationState, i: int, b: int, j: int) -> PairwiseParams:
    """Pairwise parameters after a hypothetical extra sample for design j.

    Counts (and degrees of freedom) are bumped by the indicator of j
    matching i or b; means and variances are held fixed.
    """
    _check_pair(state, i, b)
    n_i = float(state.counts[i])
    n_b = float(state.counts[b])
    var_i = max(state.m2[i] / (n_i - 1.0), VAR_FLOOR)
    var_b = max(state.m2[b] / (n_b - 1.0), VAR_FLOOR)
    gap = float(state.means[b] - state.means[i])
    bump_i = 1.0 if j == i else 0.0
    bump_b = 1.0 if j == b else 0.0
    s, d, nu = _pair_params(
        var_i, n_i + bump_i, n_i - 1.0 + bump_i,
        var_b, n_b + bump_b, n_b - 1.0 + bump_b,
        gap,
    )
    return PairwiseParams(s=s, d=d, nu=nu)

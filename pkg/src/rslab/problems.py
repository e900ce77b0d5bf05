"""Benchmark problems with known ground truth.

Every problem is a finite set of designs whose observations are independent
normals.  Deterministic test functions are turned into selection problems
by negating their values (the selection core maximizes, the functions are
minimized) and adding observation noise.  The grid problems place 25
designs on the integer lattice x1, x2 in {-2, ..., 2}; design numbering is
the bijection ``5 * (x1 + 2) + (x2 + 2) + 1`` (1-based).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence
from scipy.special import ndtri

# Lower bound for standard deviations drawn uniformly at random; U(0, 6)
# would otherwise occasionally produce a near-deterministic design.
SIGMA_FLOOR = 0.05

GRID_VALUES = (-2, -1, 0, 1, 2)


def rosenbrock(x1: float, x2: float) -> float:
    """Rosenbrock banana function; unique global minimum 0 at (1, 1)."""
    return (x1 - 1.0) ** 2 + 100.0 * (x2 - x1 * x1) ** 2


def goldstein_price(x1: float, x2: float) -> float:
    """Goldstein-Price function scaled by 1/100; unique minimum 0.03 at (0, -1)."""
    a = 1.0 + (x1 + x2 + 1.0) ** 2 * (
        19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2
    )
    b = 30.0 + (2.0 * x1 - 3.0 * x2) ** 2 * (
        18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2
    )
    return a * b / 100.0


def grid_index(x1: int, x2: int) -> int:
    """1-based design number of a lattice point."""
    if x1 not in GRID_VALUES or x2 not in GRID_VALUES:
        raise ValueError(f"({x1}, {x2}) is not on the 5x5 grid")
    return 5 * (x1 + 2) + (x2 + 2) + 1


def grid_point(design: int) -> tuple[int, int]:
    """Lattice point of a 1-based design number."""
    if not 1 <= design <= 25:
        raise ValueError(f"grid designs are numbered 1..25, got {design}")
    q, r = divmod(design - 1, 5)
    return q - 2, r - 2


@dataclass(frozen=True)
class NormalDesigns:
    """Explicit list of normal designs."""

    means: tuple[float, ...]
    sds: tuple[float, ...]

    @property
    def num_designs(self) -> int:
        return len(self.means)


@dataclass(frozen=True)
class IncreasingMeans:
    """Designs 1..M with mean i and standard deviations drawn once from
    U(sd_low, sd_high) using ``sigma_seed``."""

    num_designs: int = 10
    sd_low: float = 0.0
    sd_high: float = 6.0
    sigma_seed: int | None = None


@dataclass(frozen=True)
class RosenbrockGrid:
    """Noisy Rosenbrock on the 5x5 lattice."""

    noise_sd: float = 10.0

    @property
    def num_designs(self) -> int:
        return 25


@dataclass(frozen=True)
class GoldsteinPriceGrid:
    """Noisy Goldstein-Price on the 5x5 lattice."""

    noise_sd: float = 3.0

    @property
    def num_designs(self) -> int:
        return 25


ProblemSpec = NormalDesigns | IncreasingMeans | RosenbrockGrid | GoldsteinPriceGrid


@dataclass(frozen=True)
class Problem:
    """Immutable sampling problem: ground truth plus an observation source."""

    true_means: np.ndarray
    true_sds: np.ndarray
    best: int

    @property
    def num_designs(self) -> int:
        return len(self.true_means)

    def observation_matrix(self, seed, draws_per_design: int) -> np.ndarray:
        """Draw a (designs x draws) matrix of observations.

        Row i holds the first ``draws_per_design`` observations of design i
        in order, one independent substream per design, so entry (i, k) is
        reproducible regardless of the order in which a procedure consumes
        the observations.
        """
        root = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
        children = root.spawn(self.num_designs)
        out = np.empty((self.num_designs, draws_per_design), dtype=np.float64)
        for i, child in enumerate(children):
            z = _standard_normals(Generator(PCG64(child)), draws_per_design)
            out[i] = self.true_means[i] + self.true_sds[i] * z
        return out


def _standard_normals(gen: Generator, n: int) -> np.ndarray:
    """Standard normals by inversion of bin-centered 53-bit uniforms.

    The variate method is pinned here, in one place, so recorded seeds keep
    reproducing the same observation streams.
    """
    u = (gen.integers(0, 1 << 53, size=n) + 0.5) * (1.0 / (1 << 53))
    return ndtri(u)


def _grid_problem(func, noise_sd: float) -> Problem:
    if noise_sd <= 0:
        raise ValueError(f"noise_sd must be positive, got {noise_sd}")
    means = np.empty(25, dtype=np.float64)
    for design in range(1, 26):
        x1, x2 = grid_point(design)
        means[design - 1] = -func(float(x1), float(x2))
    sds = np.full(25, float(noise_sd))
    return Problem(true_means=means, true_sds=sds, best=int(np.argmax(means)))


def build_problem(spec: ProblemSpec, seed: int = 0) -> Problem:
    """Materialize a ProblemSpec into a sampling problem.

    ``seed`` is only used as the fallback sigma seed for IncreasingMeans
    when the spec does not pin one itself; the other variants are fully
    deterministic.
    """
    if isinstance(spec, NormalDesigns):
        means = np.asarray(spec.means, dtype=np.float64)
        sds = np.asarray(spec.sds, dtype=np.float64)
        if means.ndim != 1 or means.shape != sds.shape:
            raise ValueError("means and sds must be 1-d sequences of equal length")
        if len(means) < 2:
            raise ValueError(f"need at least 2 designs, got {len(means)}")
        if (sds <= 0).any():
            raise ValueError("all standard deviations must be positive")
        top = means.max()
        if (means == top).sum() != 1:
            raise ValueError("best mean is not unique")
        return Problem(true_means=means, true_sds=sds, best=int(np.argmax(means)))

    if isinstance(spec, IncreasingMeans):
        m = spec.num_designs
        if m < 2:
            raise ValueError(f"need at least 2 designs, got {m}")
        if not spec.sd_low < spec.sd_high:
            raise ValueError(f"need sd_low < sd_high, got [{spec.sd_low}, {spec.sd_high}]")
        sigma_seed = spec.sigma_seed if spec.sigma_seed is not None else seed
        gen = Generator(PCG64(SeedSequence(sigma_seed)))
        sds = np.maximum(gen.uniform(spec.sd_low, spec.sd_high, size=m), SIGMA_FLOOR)
        means = np.arange(1, m + 1, dtype=np.float64)
        return Problem(true_means=means, true_sds=sds, best=m - 1)

    if isinstance(spec, RosenbrockGrid):
        return _grid_problem(rosenbrock, spec.noise_sd)

    if isinstance(spec, GoldsteinPriceGrid):
        return _grid_problem(goldstein_price, spec.noise_sd)

    raise TypeError(f"unknown problem spec {spec!r}")

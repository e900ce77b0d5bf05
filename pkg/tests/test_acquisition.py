"""Measure values and lookahead improvements against independent oracles.

The transcription oracle re-implements every formula with scipy.stats.t —
a completely separate distribution code path from the package's own
incomplete-beta kernel.
"""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from rslab import special
from rslab.acquisition import (
    Measure,
    aeoc_b,
    apcs_b,
    apcs_s,
    improvements,
    improvements_from_arrays,
    measure_value,
    scaled_improvements,
)
from rslab.special import NU_FLOOR
from rslab.state import VAR_FLOOR, AllocationState


def state_from(counts, means, variances):
    counts = np.asarray(counts, dtype=np.int64)
    variances = np.asarray(variances, dtype=np.float64)
    return AllocationState(
        counts=counts.copy(),
        means=np.asarray(means, dtype=np.float64).copy(),
        m2=variances * (counts - 1),
    )


def oracle_pair(counts, means, variances, i, b, bump=None):
    ni = counts[i] + (1 if bump == i else 0)
    nb = counts[b] + (1 if bump == b else 0)
    dfi = counts[i] - 1 + (1 if bump == i else 0)
    dfb = counts[b] - 1 + (1 if bump == b else 0)
    s = variances[i] / ni + variances[b] / nb
    nu = s * s / ((variances[i] / ni) ** 2 / dfi + (variances[b] / nb) ** 2 / dfb)
    d = (means[b] - means[i]) / math.sqrt(s)
    return s, d, nu


def oracle_psi(nu, x):
    nu = max(nu, NU_FLOOR)
    return (nu + x * x) / (nu - 1.0) * stats.t.pdf(x, nu) - x * stats.t.cdf(-x, nu)


def oracle_measure(kind, counts, means, variances, best, bump=None):
    m = len(counts)
    if kind is Measure.APCS_B:
        total = 0.0
        for i in range(m):
            if i == best:
                continue
            _, d, nu = oracle_pair(counts, means, variances, i, best, bump)
            total += stats.t.cdf(-d, nu)
        return 1.0 - total
    if kind is Measure.AEOC_B:
        total = 0.0
        for i in range(m):
            if i == best:
                continue
            s, d, nu = oracle_pair(counts, means, variances, i, best, bump)
            total += math.sqrt(s) * oracle_psi(nu, d)
        return total
    prod = 1.0
    for i in range(m):
        if i == best:
            continue
        _, d, nu = oracle_pair(counts, means, variances, i, best, bump)
        prod *= stats.t.cdf(d, nu)
    return prod


def oracle_improvements(kind, counts, means, variances, best):
    base = oracle_measure(kind, counts, means, variances, best)
    out = np.empty(len(counts))
    for j in range(len(counts)):
        after = oracle_measure(kind, counts, means, variances, best, bump=j)
        out[j] = base - after if kind is Measure.AEOC_B else after - base
    return out


def random_state(rng, m=None):
    m = m if m is not None else int(rng.integers(2, 7))
    counts = rng.integers(2, 60, size=m)
    means = rng.normal(0.0, 3.0, size=m)
    variances = rng.uniform(0.5, 40.0, size=m)
    return counts, means, variances


EQUAL_PAIR = ([10, 10], [1.0, 2.0], [4.0, 4.0])


class TestMeasureValues:
    def test_two_designs_equal_means(self):
        state = state_from([10, 10], [2.0, 2.0], [4.0, 4.0])
        assert apcs_b(state) == 0.5
        assert apcs_s(state) == 0.5

    def test_equal_stats_pair_against_quadrature(self):
        state = state_from(*EQUAL_PAIR)
        d = 1.0 / math.sqrt(0.8)
        tail, _ = quad(lambda r: special.t_pdf(18.0, r), -np.inf, -d, limit=300)
        assert abs(apcs_b(state) - (1.0 - tail)) <= 1e-10
        assert abs(apcs_b(state) - 0.8608736225558705) <= 1e-10

    def test_three_designs_with_identical_competitors(self):
        state = state_from([10, 10, 10], [1.0, 1.0, 2.0], [4.0, 4.0, 4.0])
        pair = state_from(*EQUAL_PAIR)
        tail = 1.0 - apcs_b(pair)
        assert abs(apcs_b(state) - (1.0 - 2.0 * tail)) <= 1e-12

    def test_aeoc_equal_means_closed_form(self):
        state = state_from([10, 10], [2.0, 2.0], [4.0, 4.0])
        want = math.sqrt(0.8) * (18.0 / 17.0) * special.t_pdf(18.0, 0.0)
        assert abs(aeoc_b(state) - want) <= 1e-12

    def test_aeoc_vanishes_for_huge_gap(self):
        # Standardized gap around 50.
        state = state_from([10, 10], [0.0, 50.0 * math.sqrt(0.8)], [4.0, 4.0])
        assert aeoc_b(state) <= 1e-8

    def test_slepian_equals_bonferroni_for_two_designs(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            counts, means, variances = random_state(rng, m=2)
            state = state_from(counts, means, variances)
            assert apcs_b(state) == apcs_s(state)

    def test_constructed_product(self):
        # Two competitors each contributing probability 0.9.
        nu = 18.0
        d = stats.t.ppf(0.9, nu)
        gap = d * math.sqrt(0.8)
        state = state_from([10, 10, 10], [0.0, 0.0, gap], [4.0, 4.0, 4.0])
        assert abs(apcs_s(state) - 0.81) <= 1e-12

    def test_random_states_match_transcription(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            counts, means, variances = random_state(rng)
            state = state_from(counts, means, variances)
            best = int(np.argmax(means))
            for kind, func in ((Measure.APCS_B, apcs_b), (Measure.AEOC_B, aeoc_b), (Measure.APCS_S, apcs_s)):
                want = oracle_measure(kind, counts, means, np.maximum(variances, VAR_FLOOR), best)
                assert abs(func(state) - want) <= 1e-12 * max(1.0, abs(want))
                assert measure_value(kind, state) == func(state)

    def test_bonferroni_below_slepian(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            counts, means, variances = random_state(rng)
            state = state_from(counts, means, variances)
            assert apcs_b(state) <= apcs_s(state) + 1e-12
            assert 0.0 <= apcs_s(state) <= 1.0

    def test_requires_two_observations(self):
        state = state_from([2, 2], [0.0, 1.0], [1.0, 1.0])
        state.counts[0] = 1
        with pytest.raises(ValueError):
            apcs_b(state)


class TestImprovements:
    def test_purity(self):
        state = state_from([4, 7, 3], [0.0, 1.0, 2.0], [1.0, 4.0, 2.0])
        first = improvements(Measure.APCS_B, state)
        second = improvements(Measure.APCS_B, state)
        assert np.array_equal(first, second)

    def test_symmetric_competitors_get_equal_entries(self):
        state = state_from([10, 10, 10], [1.0, 1.0, 2.0], [4.0, 4.0, 4.0])
        for kind in Measure:
            vec = improvements(kind, state)
            assert abs(vec[0] - vec[1]) <= 1e-15

    def test_against_transcription(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            counts, means, variances = random_state(rng)
            state = state_from(counts, means, variances)
            best = int(np.argmax(means))
            for kind in Measure:
                mine = improvements(kind, state)
                want = oracle_improvements(kind, counts, means, np.maximum(variances, VAR_FLOOR), best)
                scale = max(1.0, np.abs(want).max())
                assert np.abs(mine - want).max() <= 1e-12 * scale

    def test_equal_stats_pair_improvements(self):
        counts, means, variances = EQUAL_PAIR
        state = state_from(counts, means, variances)
        vec = improvements(Measure.APCS_B, state)
        want = oracle_improvements(
            Measure.APCS_B, np.array(counts), np.array(means), np.array(variances), 1
        )
        assert np.abs(vec - want).max() <= 1e-12
        # Symmetric statistics: bumping either design changes s identically.
        assert abs(vec[0] - vec[1]) <= 1e-15

    def test_positive_for_close_competitors(self):
        state = state_from([8, 8, 8], [1.6, 1.8, 2.0], [4.0, 4.0, 4.0])
        for kind in Measure:
            vec = improvements(kind, state)
            assert (vec > 0.0).all()

    def test_shift_invariance(self):
        rng = np.random.default_rng(17)
        stream = rng.normal(0.0, 2.0, size=(3, 30))
        shift = 41.5
        plain = AllocationState.empty(3)
        moved = AllocationState.empty(3)
        for k in range(30):
            for i in range(3):
                plain.observe(i, float(stream[i, k] + i))
                moved.observe(i, float(stream[i, k] + i + shift))
        for func in (apcs_b, aeoc_b, apcs_s):
            assert abs(func(plain) - func(moved)) <= 1e-9 * max(1.0, abs(func(plain)))

    def test_scale_covariance(self):
        rng = np.random.default_rng(18)
        stream = rng.normal(0.0, 2.0, size=(3, 30))
        lam = 3.5
        plain = AllocationState.empty(3)
        scaled = AllocationState.empty(3)
        for k in range(30):
            for i in range(3):
                plain.observe(i, float(stream[i, k] + i))
                scaled.observe(i, float(lam * (stream[i, k] + i)))
        assert abs(apcs_b(plain) - apcs_b(scaled)) <= 1e-9
        assert abs(apcs_s(plain) - apcs_s(scaled)) <= 1e-9
        assert abs(aeoc_b(scaled) - lam * aeoc_b(plain)) <= 1e-9 * lam * aeoc_b(plain)

    def test_deep_tail_ranking_survives_underflow(self):
        # Selection-error tails far below the smallest double: the linear
        # improvement entries underflow, the scaled vector still ranks.
        counts = np.array([500, 480, 25000], dtype=np.int64)
        means = np.array([1.0, 5.0, 10.0])
        variances = np.array([4.0, 9.0, 8.0])
        vec, log_scale = scaled_improvements(Measure.APCS_B, counts, means, variances, 2)
        assert log_scale < -250.0
        assert np.isfinite(vec).all()
        assert int(np.argmax(vec)) == 1
        linear = improvements_from_arrays(Measure.APCS_B, counts, means, variances, 2)
        assert np.abs(linear).max() < 1e-100

"""Built-in oracle suites for a quick end-to-end health check.

Each suite re-derives a handful of expected values through an independent
route (quadrature, two-pass statistics, closed forms, brute-force argmax)
and compares the library against them.  Runs in well under a minute.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from rslab import acquisition, optimality, policies, problems, special
from rslab.state import AllocationState, DesignStats, update_stats


def _check(failures: list[str], name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[selftest] {status} {name}"
    if detail and not ok:
        line += f" ({detail})"
    print(line)
    if not ok:
        failures.append(name)


def _t_cdf_quadrature(nu: float, x: float) -> float:
    left, _ = quad(lambda r: special.t_pdf(nu, r), -np.inf, x, limit=200)
    return left


def _suite_special(failures: list[str]) -> None:
    worst = 0.0
    for nu in (1.0, 2.0, 5.0, 18.0, 30.0, 200.0):
        for x in np.linspace(-8.0, 8.0, 17):
            worst = max(worst, abs(special.t_cdf(nu, x) - _t_cdf_quadrature(nu, x)))
    _check(failures, "t_cdf matches quadrature on the nu/x grid", worst <= 1e-10, f"max err {worst:.2e}")

    exact = max(
        abs(special.t_cdf(1.0, 1.0) - 0.75),
        abs(special.t_cdf(5.0, 0.0) - 0.5),
        abs(special.std_normal_cdf(0.0) - 0.5),
    )
    _check(failures, "exact anchor values of the cdfs", exact <= 1e-14, f"err {exact:.2e}")

    sym = max(
        abs(special.t_cdf(nu, x) + special.t_cdf(nu, -x) - 1.0)
        for nu in (1.0, 3.7, 42.0)
        for x in (0.3, 1.5, 6.0)
    )
    _check(failures, "cdf symmetry", sym <= 1e-14, f"err {sym:.2e}")

    psi_anchor = abs(special.psi_loss(3.0, 0.0) - 1.5 * special.t_pdf(3.0, 0.0))
    _check(failures, "loss function anchor at x=0", psi_anchor <= 1e-14, f"err {psi_anchor:.2e}")

    # The loss derivative equals -cdf(-x); check with central differences.
    h = 1e-5
    worst = 0.0
    for nu in (2.5, 10.0, 60.0):
        for x in (-2.0, 0.0, 1.0, 3.0):
            fd = (special.psi_loss(nu, x + h) - special.psi_loss(nu, x - h)) / (2 * h)
            worst = max(worst, abs(fd + special.t_cdf(nu, -x)) / special.t_cdf(nu, -x))
    _check(failures, "loss derivative identity", worst <= 1e-6, f"rel err {worst:.2e}")

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        a, b = rng.uniform(0.2, 20.0, size=2)
        x = rng.uniform(0.0, 1.0)
        lhs = special.regularized_incomplete_beta(a, b, x)
        rhs = 1.0 - special.regularized_incomplete_beta(b, a, 1.0 - x)
        worst = max(worst, abs(lhs - rhs))
    _check(failures, "incomplete beta reflection", worst <= 1e-14, f"err {worst:.2e}")


def _suite_state(failures: list[str]) -> None:
    rng = np.random.default_rng(11)
    data = rng.normal(3.0, 2.0, size=5000)
    stats = DesignStats()
    for w in data:
        stats = update_stats(stats, w)
    mean_err = abs(stats.mean - data.mean()) / abs(data.mean())
    var_err = abs(stats.variance() - data.var(ddof=1)) / data.var(ddof=1)
    _check(failures, "streaming moments match two-pass", max(mean_err, var_err) <= 1e-10,
           f"rel err {max(mean_err, var_err):.2e}")

    state = AllocationState(
        counts=np.array([10, 10]), means=np.array([1.0, 2.0]),
        m2=np.array([36.0, 36.0]),
    )
    from rslab.state import pairwise_params

    p = pairwise_params(state, 0, 1)
    ok = abs(p.s - 0.8) <= 1e-14 and abs(p.nu - 18.0) <= 1e-10 and abs(p.d - 1.0 / math.sqrt(0.8)) <= 1e-12
    _check(failures, "pairwise parameters on the equal-stats pair", ok,
           f"s={p.s} nu={p.nu} d={p.d}")


def _suite_acquisition(failures: list[str]) -> None:
    state = AllocationState(
        counts=np.array([10, 10]), means=np.array([1.0, 2.0]),
        m2=np.array([36.0, 36.0]),
    )
    b = acquisition.apcs_b(state)
    s = acquisition.apcs_s(state)
    _check(failures, "single-competitor identity APCS-B == APCS-S", b == s, f"{b} vs {s}")

    d = 1.0 / math.sqrt(0.8)
    expected = 1.0 - _t_cdf_quadrature(18.0, -d)
    _check(failures, "APCS-B against quadrature", abs(b - expected) <= 1e-10,
           f"err {abs(b - expected):.2e}")


def _suite_policies(failures: list[str]) -> None:
    targets = policies.ocba_target([1.0, 2.0, 3.0], [2.0, 2.0, 2.0], best=2, total=1.0)
    expected = np.array([1.0, 4.0, math.sqrt(17.0)]) / (5.0 + math.sqrt(17.0))
    err = np.abs(targets - expected).max()
    _check(failures, "budget-ratio targets on the 3-design example", err <= 1e-12, f"err {err:.2e}")

    problem = problems.build_problem(
        problems.NormalDesigns(means=(0.0, 0.5, 1.0), sds=(1.0, 1.0, 1.0))
    )
    cfg = policies.RunConfig(budget=60, n0=3, delta=1, checkpoints=(60,))
    t1 = policies.run_procedure(problem, policies.Policy.APCS_B, cfg, seed=123)
    t2 = policies.run_procedure(problem, policies.Policy.APCS_B, cfg, seed=123)
    _check(failures, "runs are deterministic in the seed",
           np.array_equal(t1.counts, t2.counts) and np.array_equal(t1.best, t2.best))

    te = policies.run_procedure(problem, policies.Policy.EQUAL, cfg, seed=5)
    _check(failures, "equal allocation is a round robin",
           np.array_equal(te.counts[-1], [20, 20, 20]), str(te.counts[-1]))


def _suite_optimality(failures: list[str]) -> None:
    sol = optimality.solve_optimal_allocation([1.0, 2.0], [1.5, 0.5])
    err = max(abs(sol.alpha[0] - 0.75), abs(sol.alpha[1] - 0.25))
    _check(failures, "two-design closed form", err <= 1e-12, f"err {err:.2e}")

    means = [1.0, 2.0, 3.0]
    sds = [2.0, 2.0, 2.0]
    sol = optimality.solve_optimal_allocation(means, sds)
    res = optimality.residuals(sol.alpha, means, sds)
    _check(failures, "solver residuals at the solution",
           abs(res.balance) <= 1e-10 and res.max_rate_gap <= 1e-10,
           f"balance {res.balance:.2e} gap {res.max_rate_gap:.2e}")

    rng = np.random.default_rng(3)
    base = optimality.min_rate(means, sds, sol.alpha)
    worst = 0.0
    for _ in range(500):
        probe = rng.dirichlet(np.ones(3))
        worst = max(worst, optimality.min_rate(means, sds, probe) - base)
    _check(failures, "no random allocation beats the solver objective", worst <= 1e-6,
           f"excess {worst:.2e}")


def run() -> bool:
    """Run all suites; returns True when everything passed."""
    failures: list[str] = []
    _suite_special(failures)
    _suite_state(failures)
    _suite_acquisition(failures)
    _suite_policies(failures)
    _suite_optimality(failures)
    if failures:
        print(f"[selftest] {len(failures)} suite(s) failed: {', '.join(failures)}")
        return False
    print("[selftest] all suites passed")
    return True

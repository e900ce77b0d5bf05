"""Scalar special-function kernel.

Everything the selection measures need, and nothing else: log-gamma,
regularized incomplete beta, the standardized Student-t pdf/cdf, the
t expected-shortfall loss used by the AEOC-B measure, and the standard
normal cdf for analytic cross-checks.

The module exposes plain-Python wrappers that validate their domains and
raise ``ValueError`` on bad input.  The underlying ``@njit`` kernels
(``_betainc``, ``_t_cdf``, ...) assume valid input and are shared with the
jitted allocation loops elsewhere in the package.
"""

from __future__ import annotations

import math

from numba import njit

# Degrees-of-freedom floor applied inside psi_loss.  With two initial
# samples per design the Welch degrees of freedom can approach 1, where the
# (nu - 1) denominator of the loss blows up; clamping at 1.01 keeps early
# iterations finite without affecting any nu -> infinity asymptotics.
NU_FLOOR = 1.01

# Continued-fraction controls for the incomplete beta.
_BETACF_MAX_ITER = 300
_BETACF_TOL = 1e-15
_FPMIN = 1e-300


@njit(cache=True, nogil=True)
def _betacf(a: float, b: float, x: float) -> float:
    """Lentz-style continued fraction for the incomplete beta integral."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_TOL:
            break
    return h


@njit(cache=True, nogil=True)
def _beta_front(a: float, b: float, ln_x: float, ln_xc: float) -> float:
    """Prefactor x^a (1-x)^b / B(a, b) from the log arguments.

    The gamma ratio is formed directly while it is representable; going
    through log-gamma would cancel ~1e-14 of relative accuracy out of the
    large lgamma terms.
    """
    ln_pow = a * ln_x + b * ln_xc
    if a + b < 170.0:
        return math.exp(ln_pow) * math.gamma(a + b) / (math.gamma(a) * math.gamma(b))
    return math.exp(ln_pow + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))


@njit(cache=True, nogil=True)
def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = _beta_front(a, b, math.log(x), math.log1p(-x))
    # Symmetry switch keeps the continued fraction in its fast-converging
    # region on either side of the threshold.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


@njit(cache=True, nogil=True)
def _lbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@njit(cache=True, nogil=True)
def _t_pdf(nu: float, x: float) -> float:
    """Density of the standardized Student-t distribution with nu > 0."""
    ln_pdf = (
        -0.5 * math.log(nu)
        - _lbeta(0.5, 0.5 * nu)
        - 0.5 * (nu + 1.0) * math.log1p(x * x / nu)
    )
    return math.exp(ln_pdf)


@njit(cache=True, nogil=True)
def _t_tail(nu: float, x_abs: float) -> float:
    """P(T <= -x_abs) for x_abs >= 0 via the incomplete beta reduction.

    The beta argument nu/(nu+x^2) and its complement x^2/(nu+x^2) are both
    formed directly from the inputs; subtracting the rounded argument from
    one would cost five digits of the tail near x = 0.
    """
    if x_abs == 0.0:
        return 0.5
    a = 0.5 * nu
    b = 0.5
    x2 = x_abs * x_abs
    if x2 == math.inf:
        return 0.0
    z = nu / (nu + x2)
    zc = x2 / (nu + x2)
    ln_z = -math.log1p(x2 / nu)
    ln_zc = math.log(x2) - math.log(nu + x2)
    front = _beta_front(a, b, ln_z, ln_zc)
    if z < (a + 1.0) / (a + b + 2.0):
        return 0.5 * front * _betacf(a, b, z) / a
    return 0.5 * (1.0 - front * _betacf(b, a, zc) / b)


@njit(cache=True, nogil=True)
def _t_cdf(nu: float, x: float) -> float:
    """CDF of the standardized Student-t distribution with nu > 0.

    Reduced to the regularized incomplete beta through
    ``1 - 0.5 * I_{nu/(nu+x^2)}(nu/2, 1/2)`` for x >= 0 and symmetry for
    x < 0; stable in both tails.
    """
    if x == 0.0:
        return 0.5
    tail = _t_tail(nu, abs(x))
    if x > 0.0:
        return 1.0 - tail
    return tail


@njit(cache=True, nogil=True)
def _t_logpdf(nu: float, x: float) -> float:
    return (
        -0.5 * math.log(nu)
        - _lbeta(0.5, 0.5 * nu)
        - 0.5 * (nu + 1.0) * math.log1p(x * x / nu)
    )


@njit(cache=True, nogil=True)
def _t_logcdf(nu: float, x: float) -> float:
    """log of the Student-t CDF, accurate far into the lower tail.

    The deep tail sits in the direct continued-fraction branch of the
    incomplete beta, whose prefactor is already available in log form, so
    results far below the smallest normal double (log values like -1e5)
    come out exact instead of rounding to log(0).
    """
    if x == 0.0:
        return -0.6931471805599453
    if x > 0.0:
        return math.log(_t_cdf(nu, x))
    a = 0.5 * nu
    b = 0.5
    z = nu / (nu + x * x)
    if z < (a + 1.0) / (a + b + 2.0):
        ln_front = (
            math.lgamma(a + b)
            - math.lgamma(a)
            - math.lgamma(b)
            + a * math.log(z)
            + b * math.log1p(-z)
        )
        # tail = 0.5 * front * cf / a
        return -0.6931471805599453 + ln_front + math.log(_betacf(a, b, z) / a)
    # Outside the direct branch the tail is at least ~Phi(-sqrt(3)); the
    # linear value cannot underflow.
    return math.log(_t_cdf(nu, x))


@njit(cache=True, nogil=True)
def _psi(nu: float, x: float) -> float:
    """Expected shortfall E[(T_nu - x)+] of the standardized t; nu > 1."""
    return (nu + x * x) / (nu - 1.0) * _t_pdf(nu, x) - x * _t_cdf(nu, -x)


@njit(cache=True, nogil=True)
def _psi_log(nu: float, x: float) -> float:
    """log of the expected-shortfall loss, stable for large gaps.

    For x > 0 the two parts of the loss nearly cancel in linear space and
    both underflow for large x; working with their logs keeps the result
    meaningful down to magnitudes like exp(-1e5).
    """
    log_lead = math.log((nu + x * x) / (nu - 1.0)) + _t_logpdf(nu, x)
    if x == 0.0:
        return log_lead
    if x < 0.0:
        # -x * cdf(-x) is nonnegative here: plain log-sum-exp.
        other = math.log(-x) + _t_logcdf(nu, -x)
        hi = max(log_lead, other)
        return hi + math.log(math.exp(log_lead - hi) + math.exp(other - hi))
    other = math.log(x) + _t_logcdf(nu, -x)
    return log_lead + math.log1p(-math.exp(other - log_lead))


@njit(cache=True, nogil=True)
def _std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b).

    Continued-fraction evaluation with the symmetry switch at
    x > (a + 1) / (a + b + 2); monotone in x with I_0 = 0 and I_1 = 1.
    """
    a = _require_finite("a", a)
    b = _require_finite("b", b)
    x = _require_finite("x", x)
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return _betainc(a, b, x)


def t_pdf(nu: float, x: float) -> float:
    """Density of the standardized Student-t distribution."""
    nu = _require_finite("nu", nu)
    x = _require_finite("x", x)
    if nu <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    return _t_pdf(nu, x)


def t_cdf(nu: float, x: float) -> float:
    """CDF of the standardized Student-t distribution."""
    nu = _require_finite("nu", nu)
    x = _require_finite("x", x)
    if nu <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    return _t_cdf(nu, x)


def psi_loss(nu: float, x: float, nu_floor: float | None = NU_FLOOR) -> float:
    """Loss function ((nu + x^2)/(nu - 1)) * pdf(x) - x * cdf(-x).

    Equals the expected shortfall E[(T - x)+] of a standardized t variable
    T, so it is strictly positive, strictly decreasing in x, and vanishes as
    x grows.  ``nu`` is clamped below at ``nu_floor`` before evaluation;
    pass ``nu_floor=None`` to disable the clamp, in which case nu <= 1 is a
    domain error.
    """
    nu = _require_finite("nu", nu)
    x = _require_finite("x", x)
    if nu <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    if nu_floor is not None:
        nu = max(nu, nu_floor)
    if nu <= 1.0:
        raise ValueError(f"psi_loss requires nu > 1 (got {nu} with clamping disabled)")
    return _psi(nu, x)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    x = _require_finite("x", x)
    return _std_normal_cdf(x)

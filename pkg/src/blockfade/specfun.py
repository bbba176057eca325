"""Special functions used by the capacity and finite block-length bounds.

Scalar entry points validate their domain and raise :class:`DomainError`.
The ``_``-prefixed kernels are numba-compiled and skip all checks so they can
be called from inner loops (see :func:`log_reg_inc_gamma_array`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError, NumericalError

EULER_GAMMA = 0.57721566490153286061
_LOG_SQRT_2PI = 0.91893853320467274178
_TINY = 1e-300


@dataclass(frozen=True)
class Tolerance:
    rel_tol: float = 1e-15
    abs_tol: float = 1e-15
    max_iter: int = 10_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


# Lanczos coefficients for g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])

# Stirling correction terms B_{2k} / (2k (2k - 1)).
_STIRLING = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
])

# Asymptotic digamma terms B_{2k} / (2k).
_DIGAMMA_ASYM = np.array([
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
])


@njit(cache=True)
def _log_gamma(x):
    shift = 0.0
    while x < 0.5:
        shift -= math.log(x)
        x += 1.0
    if x >= 10.0:
        inv = 1.0 / x
        inv2 = inv * inv
        corr = 0.0
        power = inv
        for c in _STIRLING:
            corr += c * power
            power *= inv2
        return shift + (x - 0.5) * math.log(x) - x + _LOG_SQRT_2PI + corr
    xm1 = x - 1.0
    acc = _LANCZOS[0]
    for k in range(1, 9):
        acc += _LANCZOS[k] / (xm1 + k)
    t = xm1 + _LANCZOS_G + 0.5
    return shift + _LOG_SQRT_2PI + (xm1 + 0.5) * math.log(t) - t + math.log(acc)


@njit(cache=True)
def _digamma(x):
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    power = inv2
    series = 0.0
    for c in _DIGAMMA_ASYM:
        series += c * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


@njit(cache=True)
def _log_p_series(a, x, lga1, rtol, max_iter):
    # log P(a, x) = a log x - x - log Gamma(a+1) + log sum_k x^k / ((a+1)...(a+k))
    term = 1.0
    total = 1.0
    ap = a
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * rtol:
            return a * math.log(x) - x - lga1 + math.log(total)
    return math.nan


@njit(cache=True)
def _log_q_cf(a, x, lga, rtol, max_iter):
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < rtol:
            return a * math.log(x) - x - lga + math.log(h)
    return math.nan


@njit(cache=True)
def _log_reg_inc_gamma(a, x, lga, rtol, max_iter):
    """log P(a, x) with ``lga = log Gamma(a)`` precomputed by the caller."""
    if x <= 0.0:
        return -math.inf
    if x < a + 1.0:
        return _log_p_series(a, x, lga + math.log(a), rtol, max_iter)
    # Q(a, x) <= x^a e^-x / (Gamma(a) (x - a + 1)) for a >= 1; below e^-45
    # log P = -Q to double precision and the bound itself is returned.
    log_bound = a * math.log(x) - x - lga - math.log(x - a + 1.0 if a >= 1.0 else x)
    if log_bound < -45.0:
        return -math.exp(log_bound)
    log_q = _log_q_cf(a, x, lga, rtol, max_iter)
    if log_q < -745.0:
        return 0.0
    return math.log1p(-math.exp(log_q))


@njit(cache=True, nogil=True)
def _log_reg_inc_gamma_vec(a, x, rtol, max_iter, out):
    lga = _log_gamma(a)
    for i in range(x.shape[0]):
        out[i] = _log_reg_inc_gamma(a, x[i], lga, rtol, max_iter)


def _check_positive(name, value):
    if not value > 0 or math.isinf(value):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    _check_positive("x", x)
    return float(_log_gamma(float(x)))


def digamma(x: float) -> float:
    """Digamma function psi(x) = d/dx log Gamma(x) for ``x > 0``."""
    _check_positive("x", x)
    return float(_digamma(float(x)))


def log_reg_inc_gamma(shape: float, x: float, tol: Tolerance = Tolerance()) -> float:
    """Log of the regularized lower incomplete gamma function.

    Stays finite where the function itself underflows (tiny ``x`` relative
    to ``shape``), which is where the information density needs it most.
    """
    _check_positive("shape", shape)
    if not x >= 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if math.isinf(x):
        return 0.0
    value = _log_reg_inc_gamma(float(shape), float(x), _log_gamma(float(shape)),
                               tol.rel_tol, tol.max_iter)
    if math.isnan(value):
        raise NumericalError(
            f"incomplete gamma did not converge in {tol.max_iter} iterations "
            f"(shape={shape}, x={x})")
    return float(value)


def reg_inc_gamma(shape: float, x: float, tol: Tolerance = Tolerance()) -> float:
    """Regularized lower incomplete gamma P(shape, x), in [0, 1]."""
    return math.exp(log_reg_inc_gamma(shape, x, tol))


def log_reg_inc_gamma_array(shape: float, x, tol: Tolerance = Tolerance()) -> np.ndarray:
    """Vectorized :func:`log_reg_inc_gamma` over a 1-D array of arguments."""
    _check_positive("shape", shape)
    x = np.ascontiguousarray(x, dtype=np.float64)
    flat = x.ravel()
    if flat.size and not (flat.min() >= 0):
        raise DomainError("x must be nonnegative")
    out = np.empty_like(flat)
    _log_reg_inc_gamma_vec(float(shape), flat, tol.rel_tol, tol.max_iter, out)
    if np.isnan(out).any():
        raise NumericalError("incomplete gamma did not converge")
    return out.reshape(x.shape)


def q_func(x: float) -> float:
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _q_inv_seed(p):
    # Abramowitz & Stegun 26.2.23, |error| < 4.5e-4, valid for 0 < p <= 0.5.
    t = math.sqrt(-2.0 * math.log(p))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return t - num / den


def q_inv(p: float) -> float:
    """Inverse of :func:`q_func` on (0, 1).

    Newton iteration on Q(x) - p inside a shrinking bracket; any step that
    leaves the bracket is replaced by a bisection step.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_inv needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inv(1.0 - p)
    lo, hi = 0.0, 40.0
    x = _q_inv_seed(p)
    for _ in range(200):
        fx = q_func(x) - p
        if fx > 0:
            lo = x
        else:
            hi = x
        pdf = math.exp(-0.5 * x * x - _LOG_SQRT_2PI)
        step = fx / pdf if pdf > 0 else math.inf
        x_new = x + step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)) or hi - lo <= 1e-15 * hi:
            return x_new
        x = x_new
    return x


def binary_entropy_nats(p: float) -> float:
    """Binary entropy in nats; 0 at both endpoints."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)

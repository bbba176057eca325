"""Infinite block-length quantities.

* :func:`lower_bound_L` -- mutual information of the i.d. unitary input,
  normalized by ``T``; a lower bound on noncoherent capacity.
* :func:`upper_bound_U` -- duality upper bound with a gamma-radial auxiliary
  output law, solved as ``inf_lambda sup_p``.
* :func:`coherent_capacity`, :func:`coherent_dispersion` -- perfect-CSIR
  benchmark.

All rates are in nats per channel use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .channel import ChannelParams
from .errors import DomainError, NumericalError
from .specfun import (
    Tolerance,
    digamma,
    log_gamma,
    log_reg_inc_gamma,
    log_reg_inc_gamma_array,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    truncation_tail: float = 1e-14
    max_subdivisions: int = 500

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.truncation_tail > 0 and self.max_subdivisions > 0):
            raise DomainError("quadrature settings must be positive")


@dataclass(frozen=True)
class UpperBoundDiagnostics:
    lambda_star: float
    p_star: float
    c1: float
    inner_value: float
    multimodal: bool = False
    evaluations: int = 0


DEFAULT_QUAD = QuadratureSpec()
DEFAULT_U_TOL = Tolerance(rel_tol=1e-10, abs_tol=1e-13, max_iter=400)


def _quad(func, a, b, quad: QuadratureSpec, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(func, a, b, points=points, epsabs=quad.truncation_tail,
                                        epsrel=quad.rel_tol, limit=quad.max_subdivisions)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    if err > max(quad.rel_tol * abs(value), quad.truncation_tail) * 10:
        raise NumericalError(f"quadrature error estimate {err:.3g} too large for value {value:.6g}")
    return value


# ---------------------------------------------------------------------------
# Lower bound L(rho)

def _u_support(params: ChannelParams):
    """Integration range and breakpoints for ``u = ||y||^2 / (1 + T rho)``.

    Under the induced output law ``u`` is Exp(1) plus Gamma(T-1) scaled by
    ``1 / (1 + T rho)``.
    """
    T, P = params.T, params.power
    mean = T * (1.0 + params.rho) / (1.0 + P)
    sd = math.sqrt(1.0 + (T - 1) / (1.0 + P) ** 2)
    u_max = max(60.0 + 10.0 * math.log1p(P), mean + 40.0 * sd)
    knee = (T - 1) / P
    points = sorted({p for p in (knee, mean - 5 * sd, mean - 2 * sd, mean, mean + 2 * sd,
                                 mean + 5 * sd, mean + 10 * sd) if 0 < p < u_max})
    return u_max, points


def _lb_integrand(params: ChannelParams):
    T, P = params.T, params.power
    a = T - 1
    log_weight_const = a * math.log1p(1.0 / P)
    log_limit = a * math.log(P) - log_gamma(T)

    def integrand(u):
        if u < 1e-12:
            return 0.0
        log_gam = log_reg_inc_gamma(a, P * u)
        log_term = log_gam - a * math.log(u)
        return math.exp(-u + log_gam + log_weight_const) * log_term

    def integrand_vec(u):
        u = np.asarray(u, dtype=float)
        log_gam = log_reg_inc_gamma_array(a, P * u)
        with np.errstate(divide="ignore"):
            log_term = np.where(u < 1e-12, log_limit, log_gam - a * np.log(np.maximum(u, 1e-300)))
        return np.exp(-u + log_gam + log_weight_const) * log_term

    return integrand, integrand_vec


def _l_prefix(params: ChannelParams) -> float:
    T, rho, P = params.T, params.rho, params.power
    return (T - 1) * math.log(P) - log_gamma(T) - T + T * (1.0 + rho) / (1.0 + P)


def _lb_integral_adaptive(params, quad):
    integrand, _ = _lb_integrand(params)
    u_max, points = _u_support(params)
    return _quad(integrand, 0.0, u_max, quad, points=points)


def _lb_integral_gauss(params, panels=400, order=40):
    """Composite Gauss-Legendre on the same range, fixed nodes."""
    _, integrand_vec = _lb_integrand(params)
    u_max, points = _u_support(params)
    edges = np.unique(np.concatenate([[0.0], points, [u_max]]))
    # Spread panels over the breakpoint intervals in proportion to length,
    # with a floor so the narrow bulk intervals are well resolved.
    lengths = np.diff(edges)
    counts = np.maximum(20, np.round(panels * lengths / lengths.sum())).astype(int)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi, count in zip(edges[:-1], edges[1:], counts):
        sub = np.linspace(lo, hi, count + 1)
        half = 0.5 * np.diff(sub)[:, None]
        mid = 0.5 * (sub[1:] + sub[:-1])[:, None]
        u = (mid + half * nodes).ravel()
        total += float(np.sum((half * weights).ravel() * integrand_vec(u)))
    return total


@lru_cache(maxsize=4096)
def lower_bound_L(params: ChannelParams, quad: QuadratureSpec = DEFAULT_QUAD,
                  scheme: str = "adaptive") -> float:
    """L(rho): i.d. unitary mutual information per channel use.

    ``scheme`` selects adaptive quadrature (default) or a fixed composite
    Gauss-Legendre rule; the two are kept to cross-check each other.
    """
    if scheme == "adaptive":
        integral = _lb_integral_adaptive(params, quad)
    elif scheme == "gauss":
        integral = _lb_integral_gauss(params)
    else:
        raise DomainError(f"unknown quadrature scheme {scheme!r}")
    return (_l_prefix(params) - integral) / params.T


# ---------------------------------------------------------------------------
# Upper bound U(rho)

def log_series(p, T: int, abs_tol: float = 1e-13):
    """``sum_k (T-1) r^k / (k + T - 1)`` with ``r = p / (1 + p)``.

    This is ``(T-1) E[log((1+p) z1 + z2)] - (T-1) psi(T-1)`` for
    ``z1 ~ Gamma(1)``, ``z2 ~ Gamma(T-1)``. For ``p >= T - 1`` the closed form
    ``(T-1) r^{1-T} [log(1+p) - sum_{j<T-1} r^j / j]`` is used; below that the
    prefactor ``r^{1-T}`` would amplify cancellation, so the series is summed
    directly until the geometric tail bound drops under ``abs_tol``.
    """
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty_like(p)
    a = T - 1
    for idx, pk in enumerate(p):
        if pk < 0:
            raise DomainError("power must be nonnegative")
        if pk == 0:
            out[idx] = 1.0
            continue
        r = pk / (1.0 + pk)
        if T == 2 or pk >= a:
            j = np.arange(1, a)
            partial = float(np.sum(r ** j / j)) if a > 1 else 0.0
            out[idx] = a * math.exp(-a * math.log(r)) * (math.log1p(pk) - partial)
        else:
            # tail after K terms <= r^(K+1) (1 + p) / (K + T - 1)
            K = max(1, math.ceil(math.log(abs_tol * a / (1.0 + pk)) / math.log(r)))
            k = np.arange(K + 1)
            out[idx] = a * float(np.sum(np.exp(k * math.log(r)) / (k + a)))
    return float(out[0]) if scalar else out


def c1_constant(params: ChannelParams) -> float:
    T, rho = params.T, params.rho
    return (math.log(T * (1.0 + rho)) - log_gamma(T) - T + 1.0 / (rho + 1.0)
            + (T - 1) * digamma(T - 1))


def inner_objective(params: ChannelParams, p, lam: float, abs_tol: float = 1e-13):
    """Objective of the inner supremum over the input power ``p = ||x||^2``."""
    T, rho = params.T, params.rho
    p = np.asarray(p, dtype=float)
    return (log_series(p, T, abs_tol) - np.log1p(p) + p / (T * (1.0 + rho))
            + lam * (params.power - p))


def _golden_max(f, lo, hi, tol, max_iter):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, abs(x1)):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _inner_sup(params, lam, tol, p_max, grid):
    """Maximize the inner objective over ``p in [0, p_max]``.

    A coarse grid locates every local maximum; each is refined by golden
    section and the best kept. Returns ``(p*, value, n_local_maxima)``.
    """
    values = inner_objective(params, grid, lam, tol.abs_tol)
    peaks = [i for i in range(len(grid))
             if (i == 0 or values[i] >= values[i - 1])
             and (i == len(grid) - 1 or values[i] >= values[i + 1])]
    best_p, best_val = grid[0], values[0]
    for i in peaks:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        p, val = _golden_max(lambda q: float(inner_objective(params, q, lam, tol.abs_tol)),
                             lo, hi, tol.rel_tol, tol.max_iter)
        if values[i] > val:
            p, val = grid[i], values[i]
        if val > best_val:
            best_p, best_val = p, val
    return best_p, best_val, len(peaks)


@lru_cache(maxsize=4096)
def upper_bound_U(params: ChannelParams, tol: Tolerance = DEFAULT_U_TOL):
    """U(rho) and the optimizer's diagnostics.

    The inner supremum is finite only for ``lambda > 1 / (T (1 + rho))``
    because the objective grows like ``(T-2) log p + p (1/(T(1+rho)) - lambda)``.
    The outer function of ``lambda`` is convex (a supremum of affine
    functions), so a golden-section search over the feasible interval finds
    its infimum.
    """
    T, rho = params.T, params.rho
    lam_lo = 1.0 / (T * (1.0 + rho))
    p_max = 1e3 * params.power
    grid = np.concatenate([[0.0], np.logspace(-4, math.log10(p_max), 240)])
    state = {"evals": 0, "multimodal": False}

    def outer(lam):
        p, val, n_peaks = _inner_sup(params, lam, tol, p_max, grid)
        state["evals"] += 1
        state["multimodal"] |= n_peaks > 1
        return val, p

    step = lam_lo
    g1 = outer(lam_lo + step)[0]
    for _ in range(200):
        g2 = outer(lam_lo + 2 * step)[0]
        if g2 >= g1:
            break
        step *= 2
        g1 = g2
    else:
        raise NumericalError("lambda search window exhausted while bounding U")

    lo, hi = lam_lo, lam_lo + 2 * step
    lam, neg_val = _golden_max(lambda lam: -outer(lam)[0], lo, hi,
                               tol.rel_tol * lam_lo, tol.max_iter)
    inner_value, p_star = outer(lam)
    if p_star >= p_max * (1 - 1e-9):
        raise NumericalError(f"inner supremum hit the power cap p_max={p_max:g}")
    c1 = c1_constant(params)
    diag = UpperBoundDiagnostics(lam, float(p_star), c1, inner_value,
                                 state["multimodal"], state["evals"])
    return (c1 + inner_value) / T, diag


def upper_bound_T2_closed_form(rho: float) -> float:
    """U for ``T = 2``: the inner supremum sits at ``p = 0`` and lambda at its floor."""
    return (math.log(2.0 * (1.0 + rho)) - 0.57721566490153286061) / 2.0


# ---------------------------------------------------------------------------
# Coherent benchmark

@lru_cache(maxsize=1024)
def coherent_moments(rho: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``(E[log(1+rho z)], Var[log(1+rho z)], E[1/(1+rho z)])`` for z ~ Exp(1)."""
    if rho == 0:
        return 0.0, 0.0, 1.0
    mean = _quad(lambda z: math.exp(-z) * math.log1p(rho * z), 0.0, math.inf, quad)
    var = _quad(lambda z: math.exp(-z) * (math.log1p(rho * z) - mean) ** 2, 0.0, math.inf, quad)
    inv = _quad(lambda z: math.exp(-z) / (1.0 + rho * z), 0.0, math.inf, quad)
    return mean, var, inv


def coherent_capacity(rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E[log(1 + rho |s|^2)] with |s|^2 ~ Exp(1)."""
    if not rho > 0:
        raise DomainError(f"SNR must be positive, got {rho!r}")
    return coherent_moments(float(rho), quad)[0]


def coherent_dispersion(T: int, rho: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Coherent channel dispersion ``T Var[log(1+rho z)] + 1 - E[1/(1+rho z)]^2``."""
    if T < 1 or int(T) != T:
        raise DomainError(f"T must be a positive integer, got {T!r}")
    if not rho >= 0:
        raise DomainError(f"SNR must be nonnegative, got {rho!r}")
    _, var, inv = coherent_moments(float(rho), quad)
    return T * var + 1.0 - inv * inv

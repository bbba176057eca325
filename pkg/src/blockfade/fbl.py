"""Finite block-length bounds on R*(n, eps).

The DT achievability bound is evaluated from a single set of codeword
information densities drawn given the representative input. Both terms of
the bound are expectations of the same per-sample statistic: the output-law
probability ``(M-1)/2 * Q[i > tau]`` equals ``E_P[exp(tau - i) 1{i > tau}]``
because the induced output law is exactly the auxiliary law of the density,
so the bound is ``E_P[min(1, exp(tau - i))]`` with ``tau = log((M-1)/2)``.
Reusing one sample set for every ``M`` makes the estimated error
probability exactly monotone in ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, partial

import numpy as np

from . import mc
from .asymptotic import (
    DEFAULT_QUAD,
    QuadratureSpec,
    coherent_capacity,
    coherent_dispersion,
    lower_bound_L,
)
from .channel import ChannelParams, InfoDensitySamples, sample_codeword_density
from .errors import DomainError, StatisticalResolutionError
from .mc import McEstimate
from .specfun import binary_entropy_nats, q_inv

DEFAULT_DT_SAMPLES = 2_000_000
DEFAULT_VBAR_SAMPLES = 1_000_000
LOG_M_RESOLUTION = 1e-6


@dataclass(frozen=True)
class FblSpec:
    n: int
    L: int
    epsilon: float
    params: ChannelParams

    def __post_init__(self):
        if self.L < 1 or self.n != self.L * self.params.T:
            raise DomainError(f"block-length n={self.n} must equal L*T = {self.L}*{self.params.T}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")

    @classmethod
    def from_blocks(cls, params: ChannelParams, L: int, epsilon: float) -> "FblSpec":
        return cls(L * params.T, L, epsilon, params)


@dataclass(frozen=True)
class DtSearchResult:
    log_M: float
    rate: float
    epsilon_at_M: float
    mc: McEstimate
    rate_stderr: float = math.nan


def _check_epsilon(epsilon, allow_zero=False):
    lo_ok = epsilon >= 0.0 if allow_zero else epsilon > 0.0
    if not (lo_ok and epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")


def fano_upper(capacity_ub: float, n: int, epsilon: float) -> float:
    """Fano converse ``(C + H(eps)/n) / (1 - eps)`` in nats per channel use."""
    _check_epsilon(epsilon, allow_zero=True)
    if n < 1:
        raise DomainError("block-length must be positive")
    return (capacity_ub + binary_entropy_nats(epsilon) / n) / (1.0 - epsilon)


def dt_threshold(log_M: float) -> float:
    """``log((M - 1) / 2)`` for real ``M = exp(log_M) >= 1``."""
    if log_M <= 0.0:
        return -math.inf
    return log_M + math.log(-math.expm1(-log_M)) - math.log(2.0)


def _values(samples):
    if isinstance(samples, InfoDensitySamples):
        return samples.values, samples.seed
    return np.asarray(samples, dtype=float), None


def _dt_statistic(values, log_M):
    tau = dt_threshold(log_M)
    if tau == -math.inf:
        return np.zeros_like(values)
    return np.exp(np.minimum(0.0, tau - values))


def dt_epsilon(samples, log_M: float) -> McEstimate:
    """Estimated DT error bound at codebook size ``exp(log_M)``; mean with stderr."""
    values, seed = _values(samples)
    return McEstimate.from_values(_dt_statistic(values, log_M), seed)


def _dt_mean(values, log_M):
    return float(np.mean(_dt_statistic(values, log_M)))


def draw_codeword_densities(params: ChannelParams, L: int, n_samples: int, seed: int,
                            chunk: int = 1 << 14, workers: int = 1) -> InfoDensitySamples:
    sampler = partial(_codeword_sampler, params, L)
    values = mc.draw(sampler, n_samples, seed, chunk, workers)
    return InfoDensitySamples(values, params, L, seed)


def _codeword_sampler(params, L, rng, size):
    return sample_codeword_density(params, L, rng, size)


def dt_search(samples, n: int, epsilon: float, resolution: float = LOG_M_RESOLUTION,
              guard: bool = True) -> DtSearchResult:
    """Largest ``log M`` whose estimated DT bound stays at or below ``epsilon``."""
    _check_epsilon(epsilon)
    values, _ = _values(samples)
    lo, hi = 0.0, 1.0
    while _dt_mean(values, hi) <= epsilon:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise DomainError("DT bound never exceeds epsilon; samples look degenerate")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if _dt_mean(values, mid) <= epsilon:
            lo = mid
        else:
            hi = mid
    est = dt_epsilon(samples, lo)
    if guard and est.stderr > epsilon / 10.0:
        raise StatisticalResolutionError(
            f"stderr {est.stderr:.3g} of the DT bound at the solution exceeds epsilon/10 "
            f"with {len(values)} samples; increase n_samples")
    # Propagate the error-probability stderr through the local slope of the
    # estimated DT curve to get an uncertainty on log M.
    h = max(1e-3, 1e-4 * lo)
    slope = (_dt_mean(values, lo + h) - _dt_mean(values, max(lo - h, 0.0))) / (2 * h)
    log_m_se = est.stderr / slope if slope > 0 else math.inf
    return DtSearchResult(lo, lo / n, est.mean, est, log_m_se / n)


def dt_rate(spec: FblSpec, n_samples: int = DEFAULT_DT_SAMPLES, seed: int = 0,
            chunk: int = 1 << 14, workers: int = 1) -> DtSearchResult:
    """DT lower bound on R*(n, eps) from ``n_samples`` codeword densities."""
    samples = draw_codeword_densities(spec.params, spec.L, n_samples, seed, chunk, workers)
    return dt_search(samples, spec.n, spec.epsilon)


@lru_cache(maxsize=2048)
def vbar_estimate(params: ChannelParams, n_samples: int = DEFAULT_VBAR_SAMPLES, seed: int = 0,
                  chunk: int = 1 << 16, workers: int = 1) -> McEstimate:
    """Noncoherent dispersion ``Var[i(xbar; y)] / T`` for a single block.

    ``mean`` is the unbiased variance over ``T``; ``variance``/``stderr``
    describe the per-sample squared deviations, so ``stderr`` is the
    standard error of the dispersion itself.
    """
    values = draw_codeword_densities(params, 1, n_samples, seed, chunk, workers).values
    m = values.size
    sq = (values - values.mean()) ** 2 / params.T
    est = McEstimate.from_values(sq, seed)
    scale = m / (m - 1)
    return McEstimate(est.mean * scale, est.variance * scale ** 2, est.stderr * scale, m, seed)


def normal_approx_coh(params: ChannelParams, n: int, epsilon: float,
                      quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``C_coh - sqrt(V_coh / n) Q^{-1}(eps)``."""
    return coherent_normal_approx(params.T, params.rho, n, epsilon, quad)


def coherent_normal_approx(T: int, rho: float, n: int, epsilon: float,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Same as :func:`normal_approx_coh`, also valid for ``T = 1``."""
    _check_epsilon(epsilon)
    if n < 1:
        raise DomainError("block-length must be positive")
    v = coherent_dispersion(T, rho, quad)
    return coherent_capacity(rho, quad) - math.sqrt(v / n) * q_inv(epsilon)


def normal_approx_noncoh(params: ChannelParams, n: int, epsilon: float, vbar: McEstimate,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``L(rho) - sqrt(Vbar / n) Q^{-1}(eps)``."""
    _check_epsilon(epsilon)
    if n < 1:
        raise DomainError("block-length must be positive")
    return lower_bound_L(params, quad) - math.sqrt(vbar.mean / n) * q_inv(epsilon)


def normal_approx_noncoh_stderr(n: int, epsilon: float, vbar: McEstimate) -> float:
    """Delta-method standard error of :func:`normal_approx_noncoh`."""
    if vbar.mean <= 0:
        return math.inf
    return abs(q_inv(epsilon)) * vbar.stderr / (2.0 * math.sqrt(vbar.mean * n))

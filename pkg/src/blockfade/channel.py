"""Rayleigh block-fading channel with the i.d. unitary input.

Only two output statistics ever matter for the representative input
``xbar = [sqrt(T rho), 0, ..., 0]``: the squared magnitude of the output
component aligned with ``xbar`` and the summed squared magnitude of the
remaining ``T - 1`` components. Everything here works on that pair, so a
coherence block costs O(1) regardless of ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .errors import DomainError
from .specfun import (
    Tolerance,
    _log_gamma,
    _log_reg_inc_gamma,
    log_gamma,
    log_reg_inc_gamma_array,
)

_LOG_PI = math.log(math.pi)
# Blocks per batch inside sample_codeword_density, bounds peak memory.
_BLOCK_BATCH = 1 << 20


@dataclass(frozen=True)
class ChannelParams:
    """Coherence time ``T`` (channel uses) and linear receive SNR ``rho``."""

    T: int
    rho: float

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 2:
            raise DomainError(f"coherence time T must be an integer >= 2, got {self.T!r}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise DomainError(f"SNR rho must be positive, got {self.rho!r}")
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def from_db(cls, T: int, snr_db: float) -> "ChannelParams":
        return cls(T, 10.0 ** (snr_db / 10.0))

    @property
    def power(self) -> float:
        """Energy per coherence block, ``||xbar||^2 = T rho``."""
        return self.T * self.rho


@dataclass(frozen=True)
class OutputSufficientStats:
    y1_sq: np.ndarray | float
    rest_sq: np.ndarray | float

    @property
    def norm_sq(self):
        return np.add(self.y1_sq, self.rest_sq)


@dataclass
class InfoDensitySamples:
    """Per-codeword information densities (nats) drawn for one configuration."""

    values: np.ndarray
    params: ChannelParams
    blocks: int
    seed: Optional[int] = None
    per_block: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)


def representative_input(params: ChannelParams) -> np.ndarray:
    x = np.zeros(params.T, dtype=complex)
    x[0] = math.sqrt(params.power)
    return x


def conditional_logpdf(params: ChannelParams, x_norm_sq, stats: OutputSufficientStats):
    """log p(y | x) for an input along the first axis, ``|y^H x|^2 = x_norm_sq * y1_sq``."""
    T = params.T
    x_norm_sq = np.asarray(x_norm_sq, dtype=float)
    corr = x_norm_sq * stats.y1_sq
    return (-T * _LOG_PI - np.log1p(x_norm_sq) - stats.norm_sq
            + corr / (1.0 + x_norm_sq))


def output_logpdf_gamma(params: ChannelParams, y_norm_sq):
    """log of the auxiliary output density used by the duality upper bound.

    Under it ``||y||^2`` is exponential with mean ``T (1 + rho)`` and the
    direction of ``y`` is uniform.
    """
    s = np.asarray(y_norm_sq, dtype=float)
    if np.any(s <= 0):
        raise DomainError("auxiliary output density is singular at ||y||^2 = 0")
    T, rho = params.T, params.rho
    scale = T * (rho + 1.0)
    return (log_gamma(T) + (1 - T) * np.log(s) - T * _LOG_PI
            - math.log(scale) - s / scale)


def output_logpdf_induced(params: ChannelParams, y_norm_sq):
    """log of the output density induced by the i.d. unitary input."""
    s = np.asarray(y_norm_sq, dtype=float)
    if np.any(s <= 0):
        raise DomainError("induced output density needs ||y||^2 > 0")
    T, P = params.T, params.power
    log_gam = log_reg_inc_gamma_array(T - 1, np.atleast_1d(P * s / (1.0 + P)))
    log_gam = log_gam.reshape(s.shape) if s.ndim else float(log_gam[0])
    return (log_gamma(T) - T * _LOG_PI - math.log1p(P) - s / (1.0 + P)
            + (1 - T) * np.log(s) + log_gam + (T - 1) * math.log1p(1.0 / P))


def radial_logpdf_induced(params: ChannelParams, y_norm_sq):
    """log density of ``||y||^2`` itself under the induced output law."""
    s = np.asarray(y_norm_sq, dtype=float)
    T = params.T
    return (output_logpdf_induced(params, s) + T * _LOG_PI - log_gamma(T)
            + (T - 1) * np.log(s))


@njit(cache=True, nogil=True)
def _block_density_kernel(T, P, y1_sq, rest_sq, out):
    a = T - 1.0
    lga = _log_gamma(a)
    lgT = _log_gamma(float(T))
    c = P / (1.0 + P)
    for k in range(y1_sq.shape[0]):
        x = c * (y1_sq[k] + rest_sq[k])
        out[k] = (-lgT - c * rest_sq[k] + a * math.log(x)
                  - _log_reg_inc_gamma(a, x, lga, 1e-15, 100_000))


def info_density_block(params: ChannelParams, stats: OutputSufficientStats):
    """Information density i(xbar; y) of one coherence block, in nats.

    With ``c = T rho / (1 + T rho)`` and ``x = c ||y||^2`` the per-block
    expression collapses to
    ``-log Gamma(T) - c * rest_sq + (T-1) log x - log P(T-1, x)``.
    """
    y1 = np.atleast_1d(np.asarray(stats.y1_sq, dtype=np.float64))
    rest = np.atleast_1d(np.asarray(stats.rest_sq, dtype=np.float64))
    y1, rest = np.broadcast_arrays(y1, rest)
    if np.any(y1 + rest <= 0) or np.any(y1 < 0) or np.any(rest < 0):
        raise DomainError("information density needs ||y||^2 > 0 and nonnegative statistics")
    out = np.empty(y1.size)
    _block_density_kernel(params.T, params.power, np.ascontiguousarray(y1).ravel(),
                          np.ascontiguousarray(rest).ravel(), out)
    if np.ndim(stats.y1_sq) == 0 and np.ndim(stats.rest_sq) == 0:
        return float(out[0])
    return out.reshape(y1.shape)


def sample_output_stats(params: ChannelParams, rng: np.random.Generator,
                        size=None) -> OutputSufficientStats:
    """Draw output statistics given ``xbar`` was sent.

    ``y1 = s sqrt(T rho) + w1`` is CN(0, 1 + T rho), so ``|y1|^2`` is
    exponential with that mean; the other ``T - 1`` components are pure noise.
    """
    y1_sq = (1.0 + params.power) * rng.standard_exponential(size)
    rest_sq = rng.standard_gamma(params.T - 1, size)
    return OutputSufficientStats(y1_sq, rest_sq)


def sample_codeword_density(params: ChannelParams, blocks: int, rng: np.random.Generator,
                            size: int = 1, keep_per_block: bool = False):
    """Codeword information densities, each the sum over ``blocks`` blocks.

    Returns an array of ``size`` values, or ``(values, per_block)`` when
    ``keep_per_block`` is set (``per_block`` has shape ``(size, blocks)``).
    """
    if blocks < 1:
        raise DomainError("need at least one coherence block per codeword")
    values = np.empty(size)
    per_block = np.empty((size, blocks)) if keep_per_block else None
    rows = max(1, _BLOCK_BATCH // blocks)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        stats = sample_output_stats(params, rng, (stop - start) * blocks)
        dens = np.empty((stop - start) * blocks)
        _block_density_kernel(params.T, params.power, stats.y1_sq, stats.rest_sq, dens)
        dens = dens.reshape(stop - start, blocks)
        values[start:stop] = dens.sum(axis=1)
        if keep_per_block:
            per_block[start:stop] = dens
    if keep_per_block:
        return values, per_block
    return values

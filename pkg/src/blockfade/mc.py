"""Chunked Monte Carlo with reproducible substreams.

Chunk ``k`` of a run seeded with ``seed`` always draws from a Philox stream
keyed by ``(seed, k)``. Chunks may be computed by any number of workers; their
moments are merged in chunk order, so results are bit-identical for a given
``(seed, chunk)`` regardless of ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

Sampler = Callable[[np.random.Generator, int], np.ndarray]

DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    mean: float
    variance: float
    stderr: float
    n_samples: int
    seed: int | None = None

    @classmethod
    def from_moments(cls, moments: "Moments", seed=None) -> "McEstimate":
        if moments.n < 2:
            raise DomainError("need at least two samples for a variance")
        var = moments.variance
        return cls(moments.mean, var, math.sqrt(var / moments.n), moments.n, seed)

    @classmethod
    def from_values(cls, values, seed=None) -> "McEstimate":
        return cls.from_moments(Moments.of(np.asarray(values, dtype=float)), seed)


@dataclass
class Moments:
    """Count, mean and sum of squared deviations; merged pairwise (Chan et al.)."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    def push(self, values: np.ndarray) -> "Moments":
        return self.merge(Moments.of(np.asarray(values, dtype=float)))

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for chunk ``index`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _chunk_sizes(n_samples, chunk):
    full, rem = divmod(n_samples, chunk)
    return [chunk] * full + ([rem] if rem else [])


def map_chunks(func, n_samples: int, seed: int, chunk: int = DEFAULT_CHUNK,
               workers: int = 1) -> list:
    """Apply ``func(rng, size)`` to every chunk; results come back in chunk order."""
    if n_samples < 1 or chunk < 1:
        raise DomainError("n_samples and chunk must be positive")
    sizes = _chunk_sizes(n_samples, chunk)
    jobs = [(substream(seed, k), size) for k, size in enumerate(sizes)]
    if workers <= 1:
        return [func(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: func(*job), jobs))


def draw(sampler: Sampler, n_samples: int, seed: int, chunk: int = DEFAULT_CHUNK,
         workers: int = 1) -> np.ndarray:
    """All samples of a chunked run, concatenated in chunk order."""
    return np.concatenate(map_chunks(sampler, n_samples, seed, chunk, workers))


def estimate(sampler: Sampler, n_samples: int, seed: int, chunk: int = DEFAULT_CHUNK,
             workers: int = 1) -> McEstimate:
    """Mean, variance and standard error of the sampler's output."""
    if n_samples < 2:
        raise DomainError("need at least two samples for a variance")
    parts = map_chunks(lambda rng, size: Moments.of(np.asarray(sampler(rng, size), float)),
                       n_samples, seed, chunk, workers)
    total = Moments()
    for part in parts:
        total = total.merge(part)
    return McEstimate.from_moments(total, seed)


def empirical_tail(values, threshold: float) -> float:
    """Fraction of ``values`` at or below ``threshold``.

    This is the lower tail P[i <= tau] used by the first term of the DT
    bound; callers wanting P[i > tau] take the complement.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("empirical_tail needs at least one value")
    return float(np.count_nonzero(values <= threshold)) / values.size

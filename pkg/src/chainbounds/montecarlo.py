"""Seeded Monte Carlo expectations with reproducible chunking.

Chunk ``c`` draws from ``SeedSequence(seed, spawn_key=(c,))``, so results
depend only on ``(seed, n_samples, chunk_size)`` and chunks could be
evaluated in any order. Sums use ``math.fsum``, which is correctly
rounded and therefore independent of accumulation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class MCConfig:
    n_samples: int
    seed: int = 0
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if self.n_samples < 2:
            raise ConfigError("BAD_CONFIG", "need at least two samples for a standard error")
        if self.chunk_size < 1:
            raise ConfigError("BAD_CONFIG", "chunk_size must be positive")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    seed: int

    def within(self, target: float, n_stderr: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_stderr * self.stderr


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def estimate_expectation(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    integrand: Callable[[np.ndarray], np.ndarray],
    config: MCConfig,
) -> MCEstimate:
    """Sample mean of ``integrand(sampler(rng, n))`` with its standard error ``std / sqrt(N)``."""
    values = []
    remaining = config.n_samples
    chunk = 0
    while remaining > 0:
        size = min(config.chunk_size, remaining)
        draws = sampler(chunk_rng(config.seed, chunk), size)
        values.append(np.asarray(integrand(draws), dtype=float).ravel())
        remaining -= size
        chunk += 1
    v = np.concatenate(values)
    n = v.size
    mean = math.fsum(v.tolist()) / n
    var = math.fsum(((v - mean) ** 2).tolist()) / (n - 1)
    return MCEstimate(mean, math.sqrt(var / n), n, config.seed)

"""Monte Carlo estimation of Haar-averaged attack values.

Sample ``i`` draws its key from ``RngStream(master_seed, i)``, so every
per-sample value is a pure function of ``(master_seed, i)``. Samples are
evaluated in fixed chunks and reduced in chunk order; the result does not
depend on how many threads evaluated the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attacks import AttackSpec
from .errors import ParameterError
from .linalg import RngStream, sample_haar_batch

DEFAULT_CHUNK_SIZE = 1024
THREADS_ENV = "UNTELEGRAPH_THREADS"


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    stderr: float
    n_samples: int
    master_seed: int
    attack: str
    chunk_size: int = DEFAULT_CHUNK_SIZE


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def sample_values(spec: AttackSpec, start: int, stop: int, master_seed: int) -> np.ndarray:
    """Per-key success probabilities for sample indices ``start..stop-1``."""
    streams = [RngStream(master_seed, i) for i in range(start, stop)]
    keys = sample_haar_batch(spec.scheme.d, streams)
    return np.asarray(spec.evaluate(keys), dtype=float)


def estimate(spec: AttackSpec, samples: int, master_seed: int,
             chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int | None = None) -> ValueEstimate:
    """Haar average of the attack's per-key success probability, with standard error."""
    if not isinstance(samples, (int, np.integer)) or samples < 2:
        raise ParameterError("samples must be >= 2 for a standard error")
    if chunk_size < 1:
        raise ParameterError("chunk_size must be >= 1")
    workers = default_workers() if workers is None else workers
    bounds = [(s, min(samples, s + chunk_size)) for s in range(0, samples, chunk_size)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda b: sample_values(spec, b[0], b[1], master_seed), bounds))
    else:
        chunks = [sample_values(spec, a, b, master_seed) for a, b in bounds]
    mean = sum(float(np.sum(c)) for c in chunks) / samples
    ss = sum(float(np.sum((c - mean) ** 2)) for c in chunks)
    std = math.sqrt(ss / (samples - 1))
    return ValueEstimate(mean, std / math.sqrt(samples), int(samples), int(master_seed), spec.describe(), chunk_size)


def confidence_interval(est: ValueEstimate, z: float) -> tuple[float, float]:
    """``mean -/+ z * stderr``, clamped to ``[0, 1]``."""
    if not z > 0:
        raise ParameterError("z must be positive")
    lo = max(0.0, est.mean - z * est.stderr)
    hi = min(1.0, est.mean + z * est.stderr)
    return lo, hi

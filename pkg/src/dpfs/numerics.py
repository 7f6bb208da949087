"""Scalar and sampling primitives used by every other module.

Randomness is always driven by an explicit 64-bit seed. A seed is turned
into a ``numpy.random.Generator`` (PCG64) with :func:`rng_from_seed`, and
independent sub-streams for Monte Carlo replicates are obtained with
:func:`derive_seed`, which is a pure function of ``(seed, index)``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from dpfs.errors import DomainError

Seed = int

_U64 = 2**64
_SQRT2 = math.sqrt(2.0)


def check_seed(seed: Seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def rng_from_seed(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def derive_seed(seed: Seed, *index: int) -> int:
    """Derive a sub-seed from a master seed and one or more integer indices.

    The mixing is numpy's ``SeedSequence`` hash, so the result is stable
    across platforms and runs, and distinct index tuples give distinct
    streams with overwhelming probability.
    """
    key = [check_seed(seed)] + [int(i) for i in index]
    if any(k < 0 for k in key):
        raise DomainError("seed indices must be non-negative")
    state = np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)
    return int(state[0])


def std_normal_cdf(x):
    """Standard normal CDF, ``0.5 * erfc(-x / sqrt(2))``.

    Accepts a scalar or an array. Going through ``erfc`` rather than
    ``1 + erf`` keeps full relative precision in the lower tail.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("std_normal_cdf requires finite input")
    out = 0.5 * special.erfc(-arr / _SQRT2)
    if out.ndim == 0:
        return float(out)
    return out


def sample_normal(mean: float, std: float, count: int, seed: Seed) -> np.ndarray:
    """Draw ``count`` i.i.d. N(mean, std**2) values from the stream for ``seed``."""
    if not std >= 0:
        raise DomainError(f"std must be non-negative, got {std}")
    if count < 0:
        raise DomainError(f"count must be non-negative, got {count}")
    rng = rng_from_seed(seed)
    return mean + std * rng.standard_normal(int(count))


def sample_moments(values) -> tuple[float, float]:
    """Return ``(mean, unbiased variance)`` of a 1-d sample."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise DomainError("need at least two values for a sample variance")
    return float(arr.mean()), float(arr.var(ddof=1))

"""Deterministic seed derivation.

A master seed is expanded into independent child seeds with the splitmix64
finalizer. Children are addressed by a tuple of non-negative integer keys,
e.g. ``derive_seed(master, replication, STREAM_U)``, so the seed of a
replication never depends on how many replications ran before it or on
which worker ran it.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# stream tags used by the data generators
STREAM_SHOCK = 1
STREAM_U = 2
STREAM_D = 3


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance by the golden gamma and apply the finalizer."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *keys: int) -> int:
    """Fold ``keys`` into ``master`` and return a 64-bit child seed.

    Each key is mixed in as ``h = splitmix64(h ^ splitmix64(key))``; the
    construction is order sensitive, so ``(r, STREAM_U)`` and
    ``(STREAM_U, r)`` give unrelated seeds.
    """
    h = splitmix64(int(master) & MASK64)
    for k in keys:
        if k < 0:
            raise ValueError(f"seed keys must be non-negative, got {k}")
        h = splitmix64(h ^ splitmix64(int(k) & MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    """A PCG64 generator seeded from a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))

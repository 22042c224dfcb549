"""Deterministic RNG derivation.

Every stochastic routine takes either an explicit ``numpy.random.Generator``
or a 64-bit seed plus a stream path.  Stream seeds are derived with
splitmix64 so a (seed, trial, ...) path always maps to the same generator,
independently of evaluation order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 step; maps a 64-bit state to a well-mixed 64-bit value."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(seed: int, *path: int) -> int:
    """Fold a stream path into a base seed, one splitmix64 step per element."""
    s = splitmix64(seed & _MASK)
    for part in path:
        s = splitmix64((s ^ (part & _MASK)) & _MASK)
    return s


def rng_from(seed: int, *path: int) -> np.random.Generator:
    """Generator for stream ``path`` under ``seed``; order-independent."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *path)))


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed: splitmix of (seed, trial)."""
    return derive_seed(seed, trial)

"""Deterministic seed derivation for replicated experiments.

Every randomized routine takes an explicit integer seed; per-cell streams are
derived with a splitmix-style 64-bit hash so that (master, n, replicate)
always maps to the same stream, independent of execution order.
"""

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    """One splitmix64 scrambling round of a 64-bit integer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, *keys: int) -> int:
    """Hash a master seed and integer keys into one 64-bit stream seed."""
    state = splitmix64(master & _MASK)
    for k in keys:
        state = splitmix64(state ^ (k & _MASK))
    return state


def rng_from(master: int, *keys: int) -> np.random.Generator:
    """Generator seeded by ``derive_seed(master, *keys)``."""
    return np.random.default_rng(derive_seed(master, *keys))

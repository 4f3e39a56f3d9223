"""Splittable seed derivation.

Every random decision in an experiment draws from a seed derived from the
root seed plus a spawn key (repeat, fold, ...), so results never depend on
worker scheduling.
"""

from __future__ import annotations

import numpy as np


def derive_seed(root: int, *keys: int) -> int:
    """A 64-bit seed for the stream identified by ``(root, keys)``."""
    sequence = np.random.SeedSequence(root, spawn_key=tuple(int(k) for k in keys))
    low, high = sequence.generate_state(2, dtype=np.uint32)
    return int(low) | (int(high) << 32)


def rng_for(root: int, *keys: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(root, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)

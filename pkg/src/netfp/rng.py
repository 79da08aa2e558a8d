"""Deterministic random-stream derivation.

Every stochastic component draws from its own ``numpy.random.Generator``
derived from a seed plus the logical coordinates of the work item (graph
index, ensemble member, run number, tree number).  Streams depend only on
those coordinates, never on scheduling order, so results are identical at
any thread count.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _words(key: int | str) -> list[int]:
    if isinstance(key, (int, np.integer)):
        return [int(key) & _MASK64]
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return [int.from_bytes(digest[i:i + 8], "little") for i in (0, 8)]
    raise TypeError(f"cannot derive a random stream from {type(key).__name__}")


def seed_sequence(*keys: int | str) -> np.random.SeedSequence:
    words: list[int] = []
    for key in keys:
        words.extend(_words(key))
    return np.random.SeedSequence(words)


def derive(*keys: int | str) -> np.random.Generator:
    """Generator keyed by an ordered tuple of ints and strings."""
    return np.random.default_rng(seed_sequence(*keys))


def child_seed(*keys: int | str) -> int:
    """A single 64-bit seed derived from the key tuple, for hand-off."""
    return int(seed_sequence(*keys).generate_state(1, np.uint64)[0])

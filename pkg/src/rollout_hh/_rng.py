"""Seeded random streams.

Every stream is a ``numpy.random.Generator`` over PCG64 (a 128-bit state,
64-bit output LCG/permutation generator).  Child streams are derived with
``SeedSequence(seed, spawn_key=keys)`` so that a unit of work (instance,
state, rule) always receives the same stream regardless of execution order.
"""

from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def key_of(value: int | str) -> int:
    """Map an int or string identifier to a stable non-negative integer."""
    if isinstance(value, str):
        return zlib.crc32(value.encode("utf-8"))
    if value < 0:
        raise ValueError("stream keys must be non-negative")
    return int(value)


def child_rng(seed: int, *keys: int | str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key_of(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *keys: int | str) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key_of(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

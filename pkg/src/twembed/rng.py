"""Seeded random streams with deterministic sub-streams keyed by call path."""
from __future__ import annotations

import zlib

import numpy as np


def _key_int(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k) & 0xFFFFFFFF
    return zlib.crc32(str(k).encode())


class RandomSource:
    """Uniform draws from a PCG64 stream fixed by ``seed`` and an optional key path.

    ``child(*keys)`` derives an independent stream from the same seed, so sibling
    computations can draw without sharing state and still replay exactly.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys) -> "RandomSource":
        return RandomSource(self.seed, self.path + tuple(_key_int(k) for k in keys))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def randrange(self, n: int) -> int:
        return int(self._gen.integers(n))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, path={self.path})"

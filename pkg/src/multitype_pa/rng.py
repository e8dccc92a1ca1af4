"""Seedable, splittable random streams.

A stream is identified by ``(seed, replica)``; replicas derived from the same
seed are statistically independent and reproducible regardless of the order
in which they are run.
"""
from __future__ import annotations

import numpy as np

_BUFFER = 8192


class RandomStream:
    """PCG64 stream keyed by ``(seed, replica)`` with buffered scalar draws.

    The growth loops draw a handful of uniforms per step; pulling them from a
    pre-filled buffer avoids paying numpy call overhead on every draw.
    """

    def __init__(self, seed: int = 0, replica: int = 0):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.replica = int(replica)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.replica,))
        self.generator = np.random.Generator(np.random.PCG64(seq))
        self._buf: list[float] = []
        self._pos = 0

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, replica={self.replica})"

    def spawn(self, replica: int) -> "RandomStream":
        return RandomStream(self.seed, replica)

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.generator.random(_BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        i = int(self.uniform() * n)
        return i if i < n else n - 1

    def poisson(self, lam):
        return self.generator.poisson(lam)

"""Seeded random streams.

Every stochastic decision in the engine and in the noisy benchmark goes
through an :class:`RngStream`, so a run is a pure function of its seed.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

__all__ = ["RngStream", "ScriptedRng"]


class RngStream:
    """Thin wrapper over a PCG64 generator.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self, size=None):
        """Uniform reals in [0, 1)."""
        return self._gen.random(size)

    def random_open(self, size=None):
        """Uniform reals in (0, 1). Exact zeros are redrawn."""
        u = self._gen.random(size)
        if size is None:
            while u == 0.0:
                u = self._gen.random()
            return u
        zero = u == 0.0
        while zero.any():
            u[zero] = self._gen.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def integers(self, high: int, size=None):
        """Uniform integers in [0, high)."""
        return self._gen.integers(0, high, size)

    def bernoulli(self, p: float, size=None):
        return self._gen.random(size) < p


class ScriptedRng(RngStream):
    """Replays fixed draws, for hand-checked unit tests.

    Uniform draws (both ``random`` and ``random_open``) are consumed from
    `uniforms`; ``integers`` consumes from `ints`. Running out raises
    ``IndexError``, which makes unexpected extra draws visible.
    """

    def __init__(self, uniforms: Iterable[float] = (), ints: Iterable[int] = ()):
        self.seed = -1
        self._u = deque(float(v) for v in uniforms)
        self._i = deque(int(v) for v in ints)

    def _take(self, queue, size, dtype):
        if size is None:
            return queue.popleft()
        count = int(np.prod(size))
        return np.array([queue.popleft() for _ in range(count)], dtype=dtype).reshape(size)

    def random(self, size=None):
        return self._take(self._u, size, float)

    random_open = random

    def integers(self, high: int, size=None):
        out = self._take(self._i, size, np.int64)
        if np.any(np.asarray(out) >= high) or np.any(np.asarray(out) < 0):
            raise ValueError(f"scripted integer {out} outside [0, {high})")
        return out

    def bernoulli(self, p: float, size=None):
        return self.random(size) < p

    @property
    def exhausted(self) -> bool:
        return not self._u and not self._i

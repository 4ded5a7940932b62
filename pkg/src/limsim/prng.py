"""Portable seeded bit generator for workload data.

xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D), seeded
through splitmix64.  To fill large buffers quickly the generator runs
``STREAMS`` independent states in lockstep; state ``j`` is seeded with
splitmix64 applied to ``seed + j * golden``.  Output word ``i`` comes from
stream ``i % STREAMS`` at step ``i // STREAMS``.  Everything is plain uint64
arithmetic, so the byte stream is identical on every platform.
"""
from __future__ import annotations

import numpy as np

STREAMS = 1024
MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def xorshift64star(state: int):
    """One scalar step. Returns ``(new_state, output)``; reference for the vector version."""
    x = state
    x ^= x >> 12
    x ^= (x << 25) & MASK64
    x ^= x >> 27
    return x, (x * MULT) & MASK64


class BitStream:
    def __init__(self, seed: int, streams: int = STREAMS):
        seed &= MASK64
        states = []
        for j in range(streams):
            s = splitmix64((seed + j * GOLDEN) & MASK64)
            states.append(s or 1)          # xorshift state must be nonzero
        self._state = np.array(states, dtype=np.uint64)
        self._buf = np.empty(0, dtype=np.uint64)

    def words(self, n: int) -> np.ndarray:
        """Next ``n`` 64-bit words; the stream does not depend on how it is split into calls."""
        streams = len(self._state)
        have = len(self._buf)
        if n <= have:
            out, self._buf = self._buf[:n], self._buf[n:]
            return out
        steps = -(-(n - have) // streams)
        fresh = np.empty((steps, streams), dtype=np.uint64)
        x = self._state
        mult = np.uint64(MULT)
        with np.errstate(over="ignore"):
            for i in range(steps):
                x = x ^ (x >> np.uint64(12))
                x = x ^ (x << np.uint64(25))
                x = x ^ (x >> np.uint64(27))
                fresh[i] = x * mult
        self._state = x
        allw = np.concatenate([self._buf, fresh.reshape(-1)])
        out, self._buf = allw[:n], allw[n:]
        return out

    def bytes(self, n: int) -> np.ndarray:
        """Next ``n`` bytes, little-endian within each word."""
        return self.words(-(-n // 8)).astype("<u8").view(np.uint8)[:n]


def derive_seed(seed: int, index: int) -> int:
    """Independent sub-seed for the ``index``-th input of a workload."""
    return splitmix64((seed ^ splitmix64(index + 1)) & MASK64)

"""Per-sample random streams keyed by (seed, point_id, sample_id).

Every cascade sample owns a Philox4x64 counter-based stream.  The key
tuple is packed injectively into Philox words, with no hashing:

    key     = (seed, point_id)          two 64-bit key words
    counter = (0, 0, 0, sample_id)      sample id in the top counter word

Distinct tuples therefore give disjoint streams, and a stream's draws
depend only on its key, never on which worker produced them.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_BLOCK = 64


def _check_u64(name, value):
    value = int(value)
    if not 0 <= value <= MASK64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


class RngStream:
    """Buffered uniform(0,1) draws from a keyed Philox stream."""

    __slots__ = ("key", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, point_id: int = 0, sample_id: int = 0):
        seed = _check_u64("seed", seed)
        point_id = _check_u64("point_id", point_id)
        sample_id = _check_u64("sample_id", sample_id)
        self.key = (seed, point_id, sample_id)
        bitgen = np.random.Philox(
            key=np.array([seed, point_id], dtype=np.uint64),
            counter=np.array([0, 0, 0, sample_id], dtype=np.uint64))
        self._gen = np.random.Generator(bitgen)
        self._buf = []
        self._pos = 0

    def uniform(self) -> float:
        """Next draw in [0, 1)."""
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def __repr__(self):
        return "RngStream(seed={}, point_id={}, sample_id={})".format(*self.key)

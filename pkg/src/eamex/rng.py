"""Deterministic PCG32 random streams.

Permutation and bootstrap metrics must reproduce bit-identically across
platforms and process runs, so randomness never goes through numpy's
global state. Each consumer derives an independent stream from one seed:

* permutation importance, feature ``j`` inside subgroup ``g`` (the whole
  dataset counts as group 0): stream id ``g * n_features + j``
* surrogate bootstrap replicate ``i``: stream id ``2**32 + i``

Stream ids select the PCG32 sequence constant, so streams never share
state regardless of how many numbers each consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1
_MULT = 6364136223846793005

BOOTSTRAP_STREAM_BASE = 1 << 32


class Pcg32:
    """Minimal PCG32 (XSH-RR 64/32) generator."""

    __slots__ = ("_state", "_inc")

    def __init__(self, seed: int, stream: int = 0):
        self._inc = (((stream & _MASK64) << 1) | 1) & _MASK64
        self._state = 0
        self.next_uint32()
        self._state = (self._state + (seed & _MASK64)) & _MASK64
        self.next_uint32()

    def next_uint32(self) -> int:
        old = self._state
        self._state = (old * _MULT + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & _MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & _MASK32

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), rejection-sampled to avoid modulo bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 32) % bound
        while True:
            r = self.next_uint32()
            if r >= threshold:
                return r % bound

    def uniform(self) -> float:
        return self.next_uint32() * 2.0**-32

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of range(n)."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def choices(self, n: int, k: int) -> list[int]:
        """k independent draws from range(n), with replacement."""
        return [self.below(n) for _ in range(k)]


@dataclass(frozen=True)
class RngState:
    """Seed plus the fixed generator family; hand out per-consumer streams."""

    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def stream(self, index: int = 0) -> Pcg32:
        return Pcg32(self.seed, stream=index)

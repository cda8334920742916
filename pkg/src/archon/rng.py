"""Seedable, language-portable random number generator.

Search traces must be reproducible from a seed regardless of the host
language's standard library, so randomness comes from splitmix64, defined
entirely by its recurrence:

    state  = (state + 0x9E3779B97F4A7C15) mod 2^64
    z      = state
    z      = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z      = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Derived draws are fixed too:

    random()     = (next_u64() >> 11) * 2^-53          (float in [0, 1))
    randrange(n) = (next_u64() * n) >> 64              (int in [0, n))

Reimplementing these three definitions in another language reproduces
every trace byte for byte.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

T = TypeVar("T")


class SplitMix64:
    """splitmix64 stream seeded from a 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). n must be positive."""
        if n <= 0:
            raise ValueError("randrange() bound must be positive")
        return (self.next_u64() * n) >> 64

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("choice() from empty sequence")
        return seq[self.randrange(len(seq))]

    def coin(self, p: float) -> bool:
        """True with probability p."""
        return self.random() < p

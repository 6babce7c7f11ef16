"""Pinned pseudo-random generator for reproducible shuffles and weight init.

Dataset splits and classifier initialisation must give byte-identical results
across platforms and library versions, so this module fixes the generator
algebraically instead of relying on any library RNG:

* State seeding: the 64-bit seed is passed through one round of SplitMix64
  (Steele, Lea & Flood finaliser).  If the mixed state is zero it is replaced
  by the golden-ratio constant 0x9E3779B97F4A7C15, because an xorshift state
  of zero is a fixed point.
* Stream: xorshift64* (Marsaglia xorshift with the 2685821657736338717
  multiplier).  Each step is
      x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  output = x * M  (mod 2**64)
* Integers below n: ``next_u64() % n`` (modulo reduction, accepted bias).
* Doubles in [0, 1): the top 53 bits, ``(next_u64() >> 11) * 2.0**-53``.
* Shuffle: Fisher-Yates from the last index down, ``j = next_below(i + 1)``,
  swap a[i] and a[j].

Any reimplementation following the rules above reproduces the exact same
splits and initial weights for a given seed.
"""

from __future__ import annotations

from typing import MutableSequence

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 2685821657736338717  # 0x2545F4914F6CDD1D
_GOLDEN = 0x9E3779B97F4A7C15

DEFAULT_SEED = 42


def splitmix64(value: int) -> int:
    """One SplitMix64 finaliser round, used only to condition raw seeds."""
    z = (value + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* stream seeded through SplitMix64 (see module docstring)."""

    def __init__(self, seed: int):
        state = splitmix64(seed & _MASK64)
        self._state = state if state != 0 else _GOLDEN

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def shuffle(self, items: MutableSequence) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

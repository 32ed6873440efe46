"""Counter-based deterministic randomness (SplitMix64).

Streams are pure functions of (seed, counter), so any case can be
re-derived from the experiment root seed and its case index, on any
platform, regardless of worker scheduling.
"""

from __future__ import annotations

from fractions import Fraction

_MASK = (1 << 64) - 1


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix:
    """64-bit counter-based generator; `split(i)` derives an independent stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        return _mix(self._state)

    def split(self, index: int) -> "SplitMix":
        return SplitMix(_mix((self._state ^ 0xA5A5A5A5DEADBEEF) + 0x9E3779B97F4A7C15 * (index + 1)))

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def sample_sorted(self, lo: int, hi: int, count: int) -> list[int]:
        """`count` distinct integers from [lo, hi], sorted."""
        if count > hi - lo + 1:
            raise ValueError("sample larger than population")
        picked: set[int] = set()
        while len(picked) < count:
            picked.add(self.randint(lo, hi))
        return sorted(picked)

    def rational(self, max_num: int = 8, max_den: int = 4, nonzero: bool = False) -> Fraction:
        """Small random rational with |numerator| <= max_num, denominator <= max_den."""
        while True:
            num = self.randint(-max_num, max_num)
            if num == 0 and nonzero:
                continue
            return Fraction(num, self.randint(1, max_den))

    def shuffle(self, items: list) -> list:
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.randint(0, i)
            out[i], out[j] = out[j], out[i]
        return out

"""Seeded splitmix64 generator: all dataset and benchmark randomness flows
from one 64-bit seed so runs are byte-reproducible across platforms."""

from __future__ import annotations

from typing import List, Sequence

_MASK = (1 << 64) - 1


class SplitMix:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # rejection sampling keeps the distribution exactly uniform
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.randrange(hi - lo + 1)

    def shuffle(self, items: List) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_distinct(self, n: int, count: int) -> List[int]:
        """count distinct values from range(n)."""
        if count > n:
            raise ValueError("sample larger than population")
        if count > n // 3:
            pool = list(range(n))
            self.shuffle(pool)
            return pool[:count]
        seen = set()
        out = []
        while len(out) < count:
            v = self.randrange(n)
            if v not in seen:
                seen.add(v)
                out.append(v)
        return out

"""Seeded portable PRNG for synthetic data generation.

SplitMix64 (Steele, Lea & Flood 2014): a 64-bit state advanced by a golden
ratio increment and finalized with two xor-shift multiplies. Chosen because
the whole algorithm fits on one screen, so emitted datasets are reproducible
from the seed alone without depending on any library's generator internals.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    """Deterministic 64-bit generator; one instance per generation run."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        # Rejection sampling keeps the distribution exactly uniform.
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def sample_fraction(self, p: float) -> bool:
        """True with probability p."""
        return self.random() < p

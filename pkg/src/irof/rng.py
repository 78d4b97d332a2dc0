"""Portable seeded randomness for baselines and noise replacement.

Random orderings enter reported statistics, so runs must reproduce exactly
across platforms and interpreter versions. We therefore pin a concrete,
documented generator instead of relying on library defaults:

* State initialization: splitmix64 applied four times to the seed
  (Steele/Lea/Burger, the reference recommendation for seeding xoshiro).
* Stream: xoshiro256** (Blackman/Vigna 2018), 64-bit output per step.
* Floats: 53 high bits of one output mapped to [0, 1).
* Bounded integers: rejection sampling on the top of the 64-bit range,
  so `below(n)` is exactly uniform (no modulo bias).
* Permutations: Fisher-Yates driven by `below`.

All arithmetic is modulo 2**64; Python integers make that explicit.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Seedable xoshiro256** stream with uniform floats and permutations."""

    def __init__(self, seed: int):
        sm = seed & _MASK64
        state = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            state.append(word)
        # all-zero state is invalid for xoshiro; splitmix cannot produce it
        # for any seed, but guard anyway
        if not any(state):
            state[0] = 0x9E3779B97F4A7C15
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1), 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def permutation(self, n: int) -> list[int]:
        """Uniformly random permutation of range(n) via Fisher-Yates."""
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def derive_seed(run_seed: int, index: int) -> int:
    """Per-item seed for item `index` of a run: run_seed XOR index.

    Distinct indices give distinct seeds, and splitmix64 state expansion
    decorrelates the resulting streams even for adjacent indices.
    """
    return (run_seed ^ index) & _MASK64

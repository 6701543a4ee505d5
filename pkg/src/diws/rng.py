"""Self-contained, documented PRNG so result files reproduce bit-for-bit.

Platform RNGs are deliberately avoided: every stream here is defined by two
published algorithms so an independent reimplementation can match outputs.

* State seeding and stream derivation use SplitMix64
  (Steele, Lea & Flood; the java.util.SplittableRandom finalizer).
* The main generator is xoshiro256** (Blackman & Vigna, 2018).
* ``uniform`` takes the top 53 bits: ``(u64 >> 11) * 2**-53`` in [0, 1).
* ``normal`` is the Box-Muller transform on ``(1 - u1, u2)``; the pair is
  produced together and the second value is cached.
* ``randint`` uses rejection below the largest multiple of n (unbiased).
"""

from __future__ import annotations

import math

from .errors import UsageError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_DERIVE_SALT = 0xD1B54A32D192ED03


def splitmix64_mix(z: int) -> int:
    """The SplitMix64 output finalizer on a 64-bit value."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** stream seeded from SplitMix64.

    A single instance is single-owner; derive independent streams with
    :meth:`derive` instead of sharing one across concerns.
    """

    __slots__ = ("seed", "_s", "_cached_normal")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        state = self.seed
        s = []
        for _ in range(4):
            s.append(splitmix64_mix(state))
            state = (state + _GOLDEN) & _MASK64
        if not any(s):  # all-zero state is the one invalid xoshiro state
            s[0] = 1
        self._s = s
        self._cached_normal: float | None = None

    def derive(self, tag: int) -> "Rng":
        """Independent child stream; the (seed, tag) pair defines it."""
        child = splitmix64_mix(splitmix64_mix(self.seed) ^ splitmix64_mix((tag & _MASK64) ^ _DERIVE_SALT))
        return Rng(child)

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

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self) -> float:
        if self._cached_normal is not None:
            z = self._cached_normal
            self._cached_normal = None
            return z
        u1 = 1.0 - self.uniform()  # (0, 1]: keeps log() finite
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._cached_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise UsageError(f"randint bound must be positive, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), returned in ascending order."""
        if k > n:
            raise UsageError(f"cannot sample {k} distinct indices from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randint(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])

    def normal_matrix(self, rows: int, cols: int):
        import numpy as np

        out = np.empty((rows, cols), dtype=np.float64)
        for i in range(rows):
            for j in range(cols):
                out[i, j] = self.normal()
        return out

    def uniform_matrix(self, rows: int, cols: int, low: float, high: float):
        import numpy as np

        out = np.empty((rows, cols), dtype=np.float64)
        span = high - low
        for i in range(rows):
            for j in range(cols):
                out[i, j] = low + span * self.uniform()
        return out

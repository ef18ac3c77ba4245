"""Seeded, named random substreams.

Every stochastic operation in the package draws uniforms from a
:class:`RandomStream`. Other distributions are derived from those uniforms, so
the ``counter`` of a stream is exactly the number of uniforms consumed and a
run can be audited draw-by-draw.

Substreams are keyed by name (``root.substream("alice")``) rather than by
creation order, so adding a device to a scenario does not shift the draws seen
by any other device.
"""
from __future__ import annotations

import hashlib
import math
from statistics import NormalDist

import numpy as np

_MAX_SEED = 2**64
_BLOCK = 4096
_STD_NORMAL = NormalDist()


def _spawn_key(name: str) -> tuple[int, ...]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


class RandomStream:
    """Deterministic uniform stream on PCG64.

    Draws are buffered in blocks; because each double consumes one 64-bit
    output of the bit generator, scalar and bulk draws interleave without
    changing the sequence.
    """

    def __init__(self, seed: int, name: str = "root", *, _registry: dict | None = None):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise TypeError("seed must be an integer")
        seed = int(seed)
        if not 0 <= seed < _MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.name = name
        self.counter = 0
        sequence = np.random.SeedSequence(seed, spawn_key=_spawn_key(name))
        self._gen = np.random.Generator(np.random.PCG64(sequence))
        self._buf = np.empty(0)
        self._pos = 0
        self._registry = {} if _registry is None else _registry
        self._registry[name] = self

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, name={self.name!r}, counter={self.counter})"

    def substream(self, name: str) -> RandomStream:
        """Return the child stream ``<self.name>/<name>``; repeated calls share state."""
        full = f"{self.name}/{name}"
        existing = self._registry.get(full)
        if existing is not None:
            return existing
        return RandomStream(self.seed, full, _registry=self._registry)

    def draw_counts(self) -> dict[str, int]:
        """Uniform draws consumed by this stream and every substream, keyed by name."""
        return {name: s.counter for name, s in sorted(self._registry.items())}

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        if self._pos >= self._buf.size:
            self._buf = self._gen.random(_BLOCK)
            self._pos = 0
        u = float(self._buf[self._pos])
        self._pos += 1
        self.counter += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` draws from [0, 1) as a float64 array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        left = self._buf[self._pos : self._pos + n]
        self._pos += left.size
        rest = n - left.size
        out = np.concatenate([left, self._gen.random(rest)]) if rest else left.copy()
        self.counter += n
        return out

    def bit(self) -> int:
        return 1 if self.uniform() < 0.5 else 0

    def bits(self, n: int) -> np.ndarray:
        return (self.uniforms(n) < 0.5).astype(np.int8)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        # inverse CDF keeps the draw count at exactly one
        u = self.uniform()
        if u <= 0.0:
            u = 2.0**-60
        return mu + sigma * _STD_NORMAL.inv_cdf(u)

    def exponentials(self, rate: float, n: int) -> np.ndarray:
        """``n`` exponential gaps with the given rate (mean ``1/rate``)."""
        if rate <= 0:
            raise ValueError("rate must be positive")
        return -np.log1p(-self.uniforms(n)) / rate

    def sample_indices(self, population: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(population)`` via partial Fisher-Yates.

        Returned in ascending order.
        """
        if not 0 <= k <= population:
            raise ValueError("k must lie in [0, population]")
        pool = list(range(population))
        for i in range(k):
            j = i + min(int(self.uniform() * (population - i)), population - i - 1)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])


def poisson_arrivals(rng: RandomStream, rate_hz: float, duration_ns: int) -> np.ndarray:
    """Integer-nanosecond arrival times of a Poisson process on ``[0, duration_ns)``.

    Gaps are drawn in blocks sized from the expected count, so the number of
    uniforms consumed depends only on the stream state, rate and duration.
    """
    if duration_ns < 0:
        raise ValueError("duration_ns must be non-negative")
    if rate_hz < 0:
        raise ValueError("rate must be non-negative")
    if rate_hz == 0 or duration_ns == 0:
        return np.empty(0, dtype=np.int64)
    rate_per_ns = rate_hz * 1e-9
    expected = rate_per_ns * duration_ns
    block = max(16, int(expected + 6.0 * math.sqrt(expected) + 16))
    times: list[np.ndarray] = []
    t = 0.0
    while True:
        chunk = t + np.cumsum(rng.exponentials(rate_per_ns, block))
        inside = chunk[chunk < duration_ns]
        times.append(inside)
        if inside.size < chunk.size:
            break
        t = float(chunk[-1])
    return np.floor(np.concatenate(times)).astype(np.int64)

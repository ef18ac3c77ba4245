"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --events 200000 --repeat 5
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from qrobonet import _purepy

try:
    from qrobonet import _kernels
except ImportError:
    _kernels = None


def _match_inputs(n: int, seed: int):
    g = np.random.default_rng(seed)
    ta = np.sort(g.integers(0, 50 * n, n)).astype(np.int64)
    tb = np.sort(np.concatenate([ta[: n // 2] + g.integers(-3, 4, n // 2), g.integers(0, 50 * n, n - n // 2)]))
    return ta, tb.astype(np.int64), 10


def _bb84_inputs(n: int, seed: int):
    g = np.random.default_rng(seed)
    i8 = lambda: g.integers(0, 2, n).astype(np.int8)
    return (i8(), i8(), i8(), g.integers(0, 2, n).astype(np.uint8), i8(),
            g.random(n), g.random(n), np.ones(n, dtype=np.uint8))


def _time(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--events", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args(argv)

    cases = {
        "greedy_match": (_match_inputs(a.events, a.seed), "greedy_match"),
        "bb84_transmit": (_bb84_inputs(a.events, a.seed), "bb84_transmit"),
    }
    print(f"{'kernel':<16}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, (args, attr) in cases.items():
        py = _time(getattr(_purepy, attr), args, a.repeat)
        if _kernels is None:
            print(f"{name:<16}{py:>12.4f}{'n/a':>12}{'n/a':>10}")
            continue
        cy = _time(getattr(_kernels, attr), args, a.repeat)
        ref, got = getattr(_purepy, attr)(*args), getattr(_kernels, attr)(*args)
        assert all(np.array_equal(x, y) for x, y in zip(ref, got)), f"{name}: backends disagree"
        print(f"{name:<16}{py:>12.4f}{cy:>12.4f}{py / cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

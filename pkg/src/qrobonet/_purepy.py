"""Reference implementations of the compiled kernels in plain Python/numpy."""
from __future__ import annotations

import numpy as np

# cos^2 against the horizontal axis indexed by (angle mod 180) // 45
_P_TRANSMIT = np.array([1.0, 0.5, 0.0, 0.5])


def first_unsorted(t: np.ndarray) -> int:
    bad = np.flatnonzero(np.diff(t) < 0)
    return int(bad[0]) + 1 if bad.size else -1


def greedy_match(ta: np.ndarray, tb: np.ndarray, tau: int) -> tuple[np.ndarray, np.ndarray]:
    ta = ta.tolist()
    tb = tb.tolist()
    nb = len(tb)
    ia: list[int] = []
    ib: list[int] = []
    j = 0
    for i, t in enumerate(ta):
        while j < nb and tb[j] < t - tau:
            j += 1
        if j == nb:
            break
        if tb[j] <= t + tau:
            ia.append(i)
            ib.append(j)
            j += 1
    return np.asarray(ia, dtype=np.int64), np.asarray(ib, dtype=np.int64)


def _prepare(bit: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.where(basis == 0, np.where(bit == 1, 90, 0), np.where(bit == 1, 45, -45))


def _measure(angle: np.ndarray, basis: np.ndarray, u: np.ndarray) -> np.ndarray:
    rotated = angle + 45 * (basis != 0)
    p = _P_TRANSMIT[(rotated % 180) // 45]
    return np.where(u < p, 0, 1)


def bb84_transmit(alice_bit, alice_basis, bob_basis, eve_on, eve_basis, u_eve, u_bob, link_ok):
    alice_bit = np.asarray(alice_bit).astype(np.int64)
    alice_basis = np.asarray(alice_basis).astype(np.int64)
    eve_basis = np.asarray(eve_basis).astype(np.int64)
    eve_on = np.asarray(eve_on).astype(bool)
    link_ok = np.asarray(link_ok).astype(bool)

    angle = _prepare(alice_bit, alice_basis)
    eve_bit = _measure(angle, eve_basis, np.asarray(u_eve))
    angle = np.where(eve_on, _prepare(eve_bit, eve_basis), angle)
    bob_bit = _measure(angle, np.asarray(bob_basis).astype(np.int64), np.asarray(u_bob))

    bob = np.where(link_ok, bob_bit, -1).astype(np.int8)
    eve = np.where(link_ok & eve_on, eve_bit, -1).astype(np.int8)
    return bob, eve

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay bit-identical to qrobonet._purepy."""
import numpy as np
from libc.stdint cimport int8_t, int64_t, uint8_t


def first_unsorted(const int64_t[::1] t):
    cdef Py_ssize_t i
    for i in range(1, t.shape[0]):
        if t[i] < t[i - 1]:
            return i
    return -1


def greedy_match(const int64_t[::1] ta, const int64_t[::1] tb, int64_t tau):
    cdef Py_ssize_t na = ta.shape[0], nb = tb.shape[0]
    cdef Py_ssize_t n = na if na < nb else nb
    ia_arr = np.empty(n, dtype=np.int64)
    ib_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] ia = ia_arr
    cdef int64_t[::1] ib = ib_arr
    cdef Py_ssize_t i, j = 0, k = 0
    cdef int64_t t
    for i in range(na):
        t = ta[i]
        while j < nb and tb[j] < t - tau:
            j += 1
        if j == nb:
            break
        if tb[j] <= t + tau:
            ia[k] = i
            ib[k] = j
            k += 1
            j += 1
    return ia_arr[:k], ib_arr[:k]


cdef inline double _p_transmit(int angle) nogil:
    # cos^2 against the horizontal PBS axis; angles here are multiples of 45
    cdef int d = angle % 180
    if d < 0:
        d += 180
    if d == 0:
        return 1.0
    if d == 90:
        return 0.0
    return 0.5


cdef inline int _prepare(int bit, int basis) nogil:
    if basis == 0:
        return 90 if bit else 0
    return 45 if bit else -45


cdef inline int _measure(int angle, int basis, double u) nogil:
    if basis:
        angle += 45  # plate at 22.5 degrees
    return 0 if u < _p_transmit(angle) else 1


def bb84_transmit(
    const int8_t[::1] alice_bit,
    const int8_t[::1] alice_basis,
    const int8_t[::1] bob_basis,
    const uint8_t[::1] eve_on,
    const int8_t[::1] eve_basis,
    const double[::1] u_eve,
    const double[::1] u_bob,
    const uint8_t[::1] link_ok,
):
    cdef Py_ssize_t n = alice_bit.shape[0], i
    bob_arr = np.empty(n, dtype=np.int8)
    eve_arr = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] bob = bob_arr
    cdef int8_t[::1] eve = eve_arr
    cdef int angle, eb
    with nogil:
        for i in range(n):
            if not link_ok[i]:
                bob[i] = -1
                eve[i] = -1
                continue
            angle = _prepare(alice_bit[i], alice_basis[i])
            if eve_on[i]:
                eb = _measure(angle, eve_basis[i], u_eve[i])
                eve[i] = eb
                angle = _prepare(eb, eve_basis[i])
            else:
                eve[i] = -1
            bob[i] = _measure(angle, bob_basis[i], u_bob[i])
    return bob_arr, eve_arr

"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it was built; otherwise, or
when ``QROBONET_PURE_PYTHON=1`` is set, the ``_purepy`` versions are used.
Both produce identical results.
"""
from __future__ import annotations

import os

import numpy as np

from . import _purepy

BACKEND = "python"
_impl = _purepy

if os.environ.get("QROBONET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def _i64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def _i8(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int8)


def _u8(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.uint8)


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def first_unsorted(timestamps) -> int:
    """Index of the first timestamp smaller than its predecessor, or -1."""
    return int(_impl.first_unsorted(_i64(timestamps)))


def greedy_match(ta, tb, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Earliest-first one-to-one matching of two sorted timestamp arrays.

    Each A event, in order, takes the earliest still-unmatched B event with
    ``|ta - tb| <= tau``. Returns matched index arrays into ``ta`` and ``tb``.
    """
    return _impl.greedy_match(_i64(ta), _i64(tb), int(tau))


def bb84_transmit(alice_bit, alice_basis, bob_basis, eve_on, eve_basis, u_eve, u_bob, link_ok):
    """Batch photon transmission Alice -> (Eve) -> Bob.

    Bases are 0 for ``+`` and 1 for ``x``. Returns ``(bob_bit, eve_bit)`` as
    int8 arrays with -1 where no outcome exists (lost slot / no interception).
    """
    return _impl.bb84_transmit(
        _i8(alice_bit), _i8(alice_basis), _i8(bob_basis), _u8(eve_on),
        _i8(eve_basis), _f64(u_eve), _f64(u_bob), _u8(link_ok),
    )

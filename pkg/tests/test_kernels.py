"""Compiled and pure-Python kernels agree with each other and with per-photon code."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from qrobonet import _purepy, kernels
from qrobonet.photonics import Photon
from qrobonet.qkd import Basis, alice_prepare, bob_measure, eve_intercept_resend, transmit
from qrobonet.rng import RandomStream

try:
    from qrobonet import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

BACKENDS = [_purepy] + ([compiled] if compiled is not None else [])
sorted_times = st.lists(st.integers(0, 400), max_size=60).map(sorted)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@settings(max_examples=300, deadline=None)
@given(ta=sorted_times, tb=sorted_times, tau=st.integers(0, 30))
def test_greedy_match_equals_brute_force(impl, ta, tb, tau):
    ia, ib = impl.greedy_match(np.array(ta, dtype=np.int64), np.array(tb, dtype=np.int64), tau)
    assert list(zip(ia.tolist(), ib.tolist())) == oracles.brute_force_match(ta, tb, tau)


@settings(max_examples=200, deadline=None)
@given(ta=sorted_times, tb=sorted_times, tau=st.integers(0, 30))
def test_matching_symmetric(ta, tb, tau):
    ia, ib = kernels.greedy_match(ta, tb, tau)
    ja, jb = kernels.greedy_match(tb, ta, tau)
    assert sorted(zip(ia.tolist(), ib.tolist())) == sorted(zip(jb.tolist(), ja.tolist()))


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_first_unsorted(impl):
    assert impl.first_unsorted(np.array([1, 2, 2, 5], dtype=np.int64)) == -1
    assert impl.first_unsorted(np.array([1, 3, 2], dtype=np.int64)) == 2
    assert impl.first_unsorted(np.array([], dtype=np.int64)) == -1


def _random_inputs(n, seed):
    r = RandomStream(seed)
    return dict(
        alice_bit=r.bits(n), alice_basis=r.bits(n), bob_basis=r.bits(n),
        eve_on=(r.uniforms(n) < 0.6).astype(np.uint8), eve_basis=r.bits(n),
        u_eve=r.uniforms(n), u_bob=r.uniforms(n), link_ok=(r.uniforms(n) < 0.9).astype(np.uint8),
    )


@pytest.mark.skipif(compiled is None, reason="extension not built")
@pytest.mark.parametrize("seed", range(5))
def test_bb84_backends_agree(seed):
    inputs = _random_inputs(20_000, seed)
    args = [inputs[k] for k in ("alice_bit", "alice_basis", "bob_basis", "eve_on", "eve_basis", "u_eve", "u_bob", "link_ok")]
    py = _purepy.bb84_transmit(*args)
    cy = kernels.bb84_transmit(*args)
    assert np.array_equal(py[0], cy[0]) and np.array_equal(py[1], cy[1])


@pytest.mark.parametrize("eve", [False, True])
def test_batch_transmit_equals_per_photon_loop(eve):
    """The vectorized path makes the same draws and decisions as the photon objects."""
    n = 3000
    tx = transmit(n, RandomStream(77, "s"), eve_enabled=eve, intercept_probability=0.5)
    root = RandomStream(77, "s")
    bits, bases = root.substream("alice/bits").bits(n), root.substream("alice/bases").bits(n)
    bob_bases = root.substream("bob/bases").bits(n)
    if eve:
        intercept = root.substream("eve/intercept").uniforms(n) < 0.5
        eve_bases = root.substream("eve/bases").bits(n)
        eve_pbs = root.substream("eve/pbs")
    bob_pbs = root.substream("bob/pbs")
    for i in range(n):
        photon = Photon(i, polarization=alice_prepare(int(bits[i]), Basis.from_code(bases[i])))
        if eve and intercept[i]:
            photon, eb, _ = eve_intercept_resend(photon, eve_pbs, Basis.from_code(eve_bases[i]))
            assert tx.eve_bits[i] == eb
        elif eve:
            eve_pbs.uniform()  # the batch path draws for every slot
        assert tx.bob_bits[i] == bob_measure(photon, Basis.from_code(bob_bases[i]), bob_pbs)

import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from qrobonet.errors import AlreadyAbsorbed, InvalidAmplitude
from qrobonet.photonics import (
    Photon, PolarizationState, Port, ProbabilityAmplitude, compose_probability, hwp_rotate, malus_probability,
    pbs_route, polarizer_measure, reduce_angle,
)
from qrobonet.rng import RandomStream

half_degrees = st.integers(-720, 720).map(lambda k: k * 0.5)
angles = st.floats(-1000, 1000, allow_nan=False)


def test_reduce_angle_range():
    assert reduce_angle(135.0) == -45.0
    assert reduce_angle(-45.0) == -45.0
    assert reduce_angle(180.0) == 0.0
    assert math.copysign(1.0, reduce_angle(-180.0)) == 1.0


@given(angles)
def test_state_canonical_range(a):
    assert -45.0 <= PolarizationState(a).angle_deg < 135.0


@pytest.mark.parametrize("theta,plate,expected", [(0.0, 22.5, 45.0), (37.0, 0.0, 37.0), (0.0, 45.0, 90.0),
                                                  (45.0, 22.5, 90.0), (-45.0, 22.5, 0.0)])
def test_hwp_examples(theta, plate, expected):
    assert hwp_rotate(PolarizationState(theta), plate).angle_deg == expected


@given(half_degrees, half_degrees, half_degrees)
def test_hwp_composition_exact_on_half_degree_lattice(theta, a1, a2):
    lhs = hwp_rotate(hwp_rotate(PolarizationState(theta), a1), a2)
    assert lhs == hwp_rotate(PolarizationState(theta), a1 + a2)


@settings(max_examples=300)
@given(st.integers(0, 15), st.integers(-20, 20))
def test_bb84_states_exact_after_22_5_plates(start, steps):
    state = PolarizationState(start * 22.5)
    for _ in range(abs(steps)):
        state = hwp_rotate(state, 22.5 if steps > 0 else -22.5)
    assert state.angle_deg == reduce_angle(start * 22.5 + steps * 45.0)
    assert state.angle_deg in {-45.0, -22.5, 0.0, 22.5, 45.0, 67.5, 90.0, 112.5}


@pytest.mark.parametrize("theta,axis,expected", [(0, 0, 1.0), (90, 0, 0.0), (45, 0, 0.5)])
def test_malus_examples(theta, axis, expected):
    assert malus_probability(PolarizationState(theta), axis) == expected


@given(angles, angles)
def test_malus_matches_jones_and_is_symmetric(theta, axis):
    p = malus_probability(PolarizationState(theta), axis)
    assert 0.0 <= p <= 1.0
    assert p == malus_probability(PolarizationState(axis), theta)
    assert abs(p - oracles.transmission(theta, axis)) < 1e-9


@given(st.integers(-400, 400), st.integers(-4, 4))
def test_malus_exact_zero_when_orthogonal(axis, k):
    theta = axis + 90 + 180 * k
    assert malus_probability(PolarizationState(theta), axis) == 0.0


def test_polarizer_examples(rng):
    ok, p = polarizer_measure(Photon(1, polarization=PolarizationState(0)), 0.0, rng)
    assert ok and p.polarization.angle_deg == 0.0 and not p.consumed
    ok, p = polarizer_measure(Photon(2, polarization=PolarizationState(90)), 0.0, rng)
    assert not ok and p.consumed
    with pytest.raises(AlreadyAbsorbed):
        polarizer_measure(p, 0.0, rng)


def test_polarizer_collapses_to_axis(rng):
    ok, p = polarizer_measure(Photon(3, polarization=PolarizationState(10)), 30.0, RandomStream(0, "always"))
    if ok:
        assert p.polarization.angle_deg == 30.0


def test_polarizer_malus_fraction(rng):
    n = 100_000
    passed = sum(polarizer_measure(Photon(i, polarization=PolarizationState(45)), 0.0, rng)[0] for i in range(n))
    assert abs(passed / n - 0.5) <= 0.01


def test_pbs_examples(rng):
    for i in range(200):
        assert pbs_route(Photon(i, polarization=PolarizationState(0)), rng) is Port.TRANSMIT
        assert pbs_route(Photon(i, polarization=PolarizationState(90)), rng) is Port.REFLECT


@pytest.mark.parametrize("theta", [0.0, 10.0, 30.0, 45.0, 60.0, 89.0, 120.0])
def test_pbs_branches_sum_and_collapse(theta, rng):
    n = 20_000
    p = oracles.transmission(theta, 0.0)
    tx = rx = 0
    for i in range(n):
        ph = Photon(i, polarization=PolarizationState(theta))
        port = pbs_route(ph, rng)
        assert ph.polarization.angle_deg == (0.0 if port is Port.TRANSMIT else 90.0)
        tx += port is Port.TRANSMIT
        rx += port is Port.REFLECT
    assert tx + rx == n
    assert oracles.within_sigma(tx, n, p, 3.0) or p in (0.0, 1.0) and tx == round(n * p)


def test_pbs_half_split(rng):
    n = 100_000
    tx = sum(pbs_route(Photon(i, polarization=PolarizationState(45)), rng) is Port.TRANSMIT for i in range(n))
    assert abs(tx / n - 0.5) <= 0.01


def test_compose_examples():
    assert compose_probability([ProbabilityAmplitude(0.5, 0.0), ProbabilityAmplitude(0.5, 0.0)], False) == 1.0
    assert compose_probability([ProbabilityAmplitude(0.5, 0.0), ProbabilityAmplitude(0.5, math.pi)], False) == 0.0
    assert compose_probability([ProbabilityAmplitude(0.5), ProbabilityAmplitude(0.5)], True) == 0.5


@given(st.floats(0, 1), st.floats(-10, 10))
def test_compose_single_amplitude(m, phase):
    a = [ProbabilityAmplitude(m, phase)]
    assert compose_probability(a, True) == pytest.approx(m * m, abs=1e-15)
    assert compose_probability(a, False) == pytest.approx(m * m, abs=1e-15)


@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(-20, 20), st.floats(-20, 20))
def test_compose_two_path_formula_and_complex_oracle(m1, m2, d1, d2):
    amps = [ProbabilityAmplitude(m1, d1), ProbabilityAmplitude(m2, d2)]
    p = compose_probability(amps, False)
    assert p == pytest.approx(m1 * m1 + m2 * m2 + 2 * m1 * m2 * math.cos(d2 - d1), abs=1e-12)
    assert p == pytest.approx(oracles.amplitude_sum([m1, m2], [d1, d2]), abs=1e-12)


@pytest.mark.parametrize("m", [-0.1, 1.01, float("nan")])
def test_invalid_amplitude(m):
    with pytest.raises(InvalidAmplitude):
        ProbabilityAmplitude(m)


def test_compose_rejects_unphysical_and_empty():
    with pytest.raises(InvalidAmplitude):
        compose_probability([ProbabilityAmplitude(1.0), ProbabilityAmplitude(1.0)], False)
    with pytest.raises(ValueError):
        compose_probability([], True)


def test_unresolved_photon_needs_pair():
    with pytest.raises(ValueError):
        Photon(1)
    with pytest.raises(ValueError):
        Photon(1, wavelength_nm=0.0, polarization=PolarizationState(0))

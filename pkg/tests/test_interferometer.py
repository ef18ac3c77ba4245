import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from qrobonet.errors import NonPositiveWavelength
from qrobonet.interferometer import (
    MachZehnderConfig, OutcomeDistribution, arm_phase, detection_probability, sample_outcomes, simulate_stream,
)
from qrobonet.photonics import ProbabilityAmplitude, compose_probability


def test_arm_phase_examples():
    assert arm_phase(1.0, 1.0) == 2 * math.pi
    assert arm_phase(0.0, 0.7) == 0.0
    assert arm_phase(1.25, 1.0) == pytest.approx(2.5 * math.pi)
    with pytest.raises(NonPositiveWavelength):
        arm_phase(1.0, 0.0)


def test_detection_examples():
    assert detection_probability(MachZehnderConfig(delta_override=0.0)).p_detector_B == 1.0
    assert detection_probability(MachZehnderConfig(delta_override=math.pi)).p_detector_B == 0.0
    d = detection_probability(MachZehnderConfig(arm2_blocked=True))
    assert (d.p_detector_B, d.p_detector_C, d.p_absorbed) == (0.25, 0.25, 0.5)


def test_phase_from_lengths():
    # quarter-wave path difference: delta = pi/2
    d = detection_probability(MachZehnderConfig(arm1_length=1.0, arm2_length=1.25, wavelength=1.0))
    assert d.p_detector_B == pytest.approx(0.5, abs=1e-12)
    assert MachZehnderConfig(arm1_length=2.0, arm2_length=3.0, wavelength=2.0).phase_difference() == pytest.approx(math.pi)


@given(st.floats(-50, 50))
def test_matches_splitter_matrix_oracle(delta):
    d = detection_probability(MachZehnderConfig(delta_override=delta))
    b, c, a = oracles.mach_zehnder(0.5, delta)
    assert d.p_detector_B == pytest.approx(b, abs=1e-12)
    assert d.p_detector_C == pytest.approx(c, abs=1e-12)
    assert d.p_detector_B + d.p_detector_C == 1.0 and d.p_absorbed == 0.0
    assert d.p_detector_B == pytest.approx(0.5 * (1 + math.cos(delta)), abs=1e-12)


@given(st.floats(-50, 50))
def test_periodic(delta):
    p1 = detection_probability(MachZehnderConfig(delta_override=delta)).p_detector_B
    p2 = detection_probability(MachZehnderConfig(delta_override=delta + 2 * math.pi)).p_detector_B
    assert abs(p1 - p2) <= 1e-12


@given(st.floats(0.05, 0.95), st.floats(-10, 10))
def test_asymmetric_splitters_match_oracle(r2, delta):
    cfg = MachZehnderConfig(splitter_amplitude=math.sqrt(r2), delta_override=delta)
    d = detection_probability(cfg)
    b, c, _ = oracles.mach_zehnder(cfg.reflectance, delta)
    assert d.p_detector_B == pytest.approx(b, abs=1e-12)
    blocked = detection_probability(MachZehnderConfig(splitter_amplitude=math.sqrt(r2), arm2_blocked=True))
    ob, oc, oa = oracles.mach_zehnder(cfg.reflectance, 0.0, arm2_blocked=True)
    assert (blocked.p_detector_B, blocked.p_detector_C, blocked.p_absorbed) == pytest.approx((ob, oc, oa), abs=1e-12)


def test_blocked_is_distinguishable_single_path():
    d = detection_probability(MachZehnderConfig(arm2_blocked=True))
    assert d.p_detector_B == compose_probability([ProbabilityAmplitude(0.5)], distinguishable=True) == 0.25


@pytest.mark.parametrize("kw", [dict(arm1_length=0.0), dict(arm2_length=-1.0), dict(splitter_amplitude=1.0),
                                dict(splitter_amplitude=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MachZehnderConfig(**kw)
    with pytest.raises(NonPositiveWavelength):
        MachZehnderConfig(wavelength=0.0)


def test_outcome_distribution_validation():
    with pytest.raises(ValueError):
        OutcomeDistribution(0.5, 0.6, 0.0)


def test_simulate_examples(rng):
    assert simulate_stream(MachZehnderConfig(), 0, rng).total == 0
    c = simulate_stream(MachZehnderConfig(delta_override=0.0), 100_000, rng)
    assert (c.detector_B, c.detector_C, c.absorbed) == (100_000, 0, 0)
    c = simulate_stream(MachZehnderConfig(arm2_blocked=True), 100_000, rng)
    assert abs(c.detector_B / 1e5 - 0.25) <= 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000), st.floats(0, 2 * math.pi), st.booleans())
def test_counts_sum_to_n(n, delta, blocked):
    from qrobonet.rng import RandomStream

    c = simulate_stream(MachZehnderConfig(delta_override=delta, arm2_blocked=blocked), n, RandomStream(1))
    assert c.total == n and min(c.detector_B, c.detector_C, c.absorbed) >= 0


@pytest.mark.parametrize("k", range(20))
def test_monte_carlo_5_sigma(k, rng):
    delta = k * 2 * math.pi / 20
    n = 10_000
    c = simulate_stream(MachZehnderConfig(delta_override=delta), n, rng)
    p = 0.5 * (1 + math.cos(delta))
    assert oracles.within_sigma(c.detector_B, n, p, 5.0)


def test_sampling_one_draw_per_photon(rng):
    sample_outcomes(detection_probability(MachZehnderConfig()), 1234, rng)
    assert rng.counter == 1234

"""Mach-Zehnder interferometer: analytic outcome law and photon-stream sampling.

Detector labels follow the usual layout: the photon enters at A, reaches
detector B through either arm (reflect-then-transmit on arm 1,
transmit-then-reflect on arm 2) and detector C otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveWavelength
from .photonics import ProbabilityAmplitude, compose_probability
from .rng import RandomStream

BALANCED_AMPLITUDE = math.sqrt(0.5)
_BALANCED_SNAP = 1e-12


def arm_phase(length: float, wavelength: float) -> float:
    """Optical phase accumulated over ``length``: ``2*pi*length/wavelength``."""
    if not wavelength > 0:
        raise NonPositiveWavelength(f"wavelength must be positive, got {wavelength!r}")
    return 2.0 * math.pi * length / wavelength


@dataclass(frozen=True)
class MachZehnderConfig:
    arm1_length: float = 1.0
    arm2_length: float = 1.0
    wavelength: float = 1.0
    arm2_blocked: bool = False
    splitter_amplitude: float = BALANCED_AMPLITUDE
    delta_override: float | None = None

    def __post_init__(self) -> None:
        if not (self.arm1_length > 0 and self.arm2_length > 0):
            raise ValueError("arm lengths must be positive")
        if not self.wavelength > 0:
            raise NonPositiveWavelength(f"wavelength must be positive, got {self.wavelength!r}")
        if not 0.0 < self.splitter_amplitude**2 < 1.0:
            raise ValueError("splitter_amplitude**2 must lie strictly between 0 and 1")

    @property
    def reflectance(self) -> float:
        r2 = self.splitter_amplitude**2
        # 1/sqrt(2) squares to 0.5000000000000001; snap so the balanced case stays exact
        return 0.5 if abs(r2 - 0.5) < _BALANCED_SNAP else r2

    def phase_difference(self) -> float:
        if self.delta_override is not None:
            return float(self.delta_override)
        return arm_phase(self.arm2_length, self.wavelength) - arm_phase(self.arm1_length, self.wavelength)


@dataclass(frozen=True)
class OutcomeDistribution:
    p_detector_B: float
    p_detector_C: float
    p_absorbed: float

    def __post_init__(self) -> None:
        parts = (self.p_detector_B, self.p_detector_C, self.p_absorbed)
        if min(parts) < 0 or abs(math.fsum(parts) - 1.0) > 1e-12:
            raise ValueError(f"not a probability distribution: {parts}")


@dataclass(frozen=True)
class OutcomeCounts:
    detector_B: int
    detector_C: int
    absorbed: int

    @property
    def total(self) -> int:
        return self.detector_B + self.detector_C + self.absorbed


def detection_probability(config: MachZehnderConfig) -> OutcomeDistribution:
    R = config.reflectance
    T = 1.0 - R
    if config.arm2_blocked:
        # only arm 1 is open: reflect, then transmit (B) or reflect (C); the trap takes arm 2
        p_b = compose_probability([ProbabilityAmplitude(math.sqrt(R * T))], distinguishable=True)
        return OutcomeDistribution(p_b, R * R, T)
    delta = config.phase_difference()
    path = math.sqrt(R * T)
    p_b = compose_probability(
        [ProbabilityAmplitude(path, 0.0), ProbabilityAmplitude(path, delta)],
        distinguishable=False,
    )
    return OutcomeDistribution(p_b, 1.0 - p_b, 0.0)


def sample_outcomes(dist: OutcomeDistribution, n_photons: int, rng: RandomStream) -> OutcomeCounts:
    """One uniform per photon: B below ``p_B``, C below ``p_B + p_C``, else absorbed."""
    if n_photons < 0:
        raise ValueError("n_photons must be non-negative")
    u = rng.uniforms(n_photons)
    b = int(np.count_nonzero(u < dist.p_detector_B))
    if dist.p_absorbed == 0.0:
        bc = n_photons  # p_B + (1 - p_B) may round below 1
    else:
        bc = int(np.count_nonzero(u < dist.p_detector_B + dist.p_detector_C))
    return OutcomeCounts(b, bc - b, n_photons - bc)


def simulate_stream(config: MachZehnderConfig, n_photons: int, rng: RandomStream) -> OutcomeCounts:
    return sample_outcomes(detection_probability(config), n_photons, rng)

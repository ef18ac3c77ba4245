"""Photon-level polarization optics.

Angles are linear polarization angles in degrees, measured from horizontal and
reduced modulo 180 into ``[-45, 135)`` so that the four BB84 states
-45, 0, 45 and 90 are their own canonical form.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConsumedPhoton, InvalidAmplitude, InvalidState
from .rng import RandomStream

PROBABILITY_TOLERANCE = 1e-12

# cos^2 at multiples of 45 degrees; keeps deterministic BB84 branches exact
_EXACT_MALUS = {0.0: 1.0, 45.0: 0.5, 90.0: 0.0, 135.0: 0.5}


def reduce_angle(angle_deg: float) -> float:
    """Reduce an angle modulo 180 into ``[-45, 135)``.

    In-range values pass through untouched. Otherwise float ``%`` (exact up to
    the final wrap) is followed by a shift that is exact in [135, 180), so
    plate sequences built from 22.5 degree steps do not drift.
    """
    a = float(angle_deg)
    if not -45.0 <= a < 135.0:
        a %= 180.0
        if a >= 135.0:
            a -= 180.0
    return 0.0 if a == 0.0 else a  # fold -0.0


@dataclass(frozen=True)
class PolarizationState:
    angle_deg: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.angle_deg):
            raise InvalidState(f"non-finite polarization angle {self.angle_deg!r}")
        object.__setattr__(self, "angle_deg", reduce_angle(self.angle_deg))

    def orthogonal(self) -> PolarizationState:
        return PolarizationState(self.angle_deg + 90.0)

    def __str__(self) -> str:
        return f"|{self.angle_deg:g}°⟩"


H = PolarizationState(0.0)
V = PolarizationState(90.0)
D = PolarizationState(45.0)
A = PolarizationState(-45.0)


@dataclass(frozen=True)
class ProbabilityAmplitude:
    magnitude: float
    phase_rad: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.magnitude <= 1.0):
            raise InvalidAmplitude(f"amplitude magnitude {self.magnitude!r} outside [0, 1]")
        if not math.isfinite(self.phase_rad):
            raise InvalidAmplitude(f"non-finite phase {self.phase_rad!r}")


class Port(enum.Enum):
    TRANSMIT = "transmit"
    REFLECT = "reflect"


@dataclass(eq=False)
class Photon:
    """A single photon.

    ``polarization`` is ``None`` while the photon belongs to an unmeasured
    entangled pair. Optical elements mutate the photon in place and also
    return it, so a photon consumed by one element cannot be reused through
    a stale reference.
    """

    id: int
    emit_time_ns: int = 0
    wavelength_nm: float = 810.0
    polarization: PolarizationState | None = None
    pair_id: int | None = None
    consumed: bool = False

    def __post_init__(self) -> None:
        if not self.wavelength_nm > 0:
            raise ValueError("wavelength_nm must be positive")
        if self.polarization is None and self.pair_id is None:
            raise InvalidState("only entangled photons may have unresolved polarization")

    def ensure_usable(self) -> None:
        if self.consumed:
            raise ConsumedPhoton(f"photon {self.id} was already absorbed or detected")

    def definite_polarization(self) -> PolarizationState:
        self.ensure_usable()
        if self.polarization is None:
            raise InvalidState(f"photon {self.id} is entangled and unresolved; measure it via its pair")
        return self.polarization


def hwp_rotate(pol: PolarizationState, plate_angle_deg: float) -> PolarizationState:
    """Half-wave plate as a pure rotation by twice the plate angle."""
    return PolarizationState(pol.angle_deg + 2.0 * plate_angle_deg)


def malus_probability(pol: PolarizationState | float, axis_deg: float) -> float:
    """Transmission probability cos^2 of the angle between ``pol`` and ``axis_deg``."""
    angle = reduce_angle(pol.angle_deg if isinstance(pol, PolarizationState) else pol)
    # both operands canonical, and |a - b| is bit-identical under swapping
    diff = abs(angle - reduce_angle(axis_deg))
    exact = _EXACT_MALUS.get(diff)
    if exact is not None:
        return exact
    c = math.cos(math.radians(min(diff, 180.0 - diff)))
    return c * c


def polarizer_measure(photon: Photon, axis_deg: float, rng: RandomStream) -> tuple[bool, Photon]:
    """Pass ``photon`` through an absorbing polarizer.

    Consumes exactly one uniform. A transmitted photon collapses onto the
    axis; an absorbed one is marked consumed.
    """
    pol = photon.definite_polarization()
    transmitted = rng.uniform() < malus_probability(pol, axis_deg)
    if transmitted:
        photon.polarization = PolarizationState(axis_deg)
    else:
        photon.consumed = True
    return transmitted, photon


def analyzer_route(photon: Photon, axis_deg: float, rng: RandomStream) -> Port:
    """Two-port polarization analyzer with its transmit axis at ``axis_deg``.

    The photon collapses to the axis on TRANSMIT and to the orthogonal angle
    on REFLECT. Consumes exactly one uniform.
    """
    pol = photon.definite_polarization()
    if rng.uniform() < malus_probability(pol, axis_deg):
        photon.polarization = PolarizationState(axis_deg)
        return Port.TRANSMIT
    photon.polarization = PolarizationState(axis_deg + 90.0)
    return Port.REFLECT


def pbs_route(photon: Photon, rng: RandomStream) -> Port:
    """Polarizing beam splitter cube: horizontal passes, vertical reflects."""
    return analyzer_route(photon, 0.0, rng)


def compose_probability(amps: Sequence[ProbabilityAmplitude], distinguishable: bool) -> float:
    """Event probability from the amplitudes of its alternative paths.

    Distinguishable paths add probabilities. Indistinguishable paths add
    amplitudes; ``|sum|^2`` is expanded into squared magnitudes plus pairwise
    ``2|a||b|cos(phase_b - phase_a)`` cross terms, which keeps the fully
    constructive and fully destructive cases exact.
    """
    amps = list(amps)
    if not amps:
        raise InvalidAmplitude("at least one amplitude is required")
    for a in amps:
        if not isinstance(a, ProbabilityAmplitude):
            raise InvalidAmplitude(f"expected ProbabilityAmplitude, got {type(a).__name__}")
    total = math.fsum(a.magnitude * a.magnitude for a in amps)
    if not distinguishable:
        total += math.fsum(
            2.0 * a.magnitude * b.magnitude * math.cos(b.phase_rad - a.phase_rad)
            for a, b in itertools.combinations(amps, 2)
        )
    if total > 1.0 + PROBABILITY_TOLERANCE or total < -PROBABILITY_TOLERANCE:
        raise InvalidAmplitude(f"amplitudes give probability {total!r} outside [0, 1]")
    return min(1.0, max(0.0, total))

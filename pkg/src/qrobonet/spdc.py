"""Entangled-pair source, single-photon counters and coincidence identification.

Timestamps are integer nanoseconds. A detector stamps events with its own
clock, which runs ``clock_offset_ns`` ahead of simulation time.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ClassicalChannel
from .errors import UnsortedInput
from .photonics import Photon, PolarizationState, Port, analyzer_route
from .rng import RandomStream, poisson_arrivals

FILTER_CENTER_NM = 810.0
FILTER_BANDWIDTH_NM = 30.0


class Which(enum.Enum):
    SIGNAL = "signal"
    IDLER = "idler"


@dataclass(frozen=True)
class PumpSource:
    wavelength_nm: float = 405.0
    power_mW: float = 100.0
    pair_rate_hz: float = 1e6

    def __post_init__(self) -> None:
        if not self.wavelength_nm > 0:
            raise ValueError("pump wavelength must be positive")
        if self.pair_rate_hz < 0:
            raise ValueError("pair_rate_hz must be non-negative")


@dataclass(frozen=True)
class DetectorSpec:
    """Single-photon counting module.

    ``active_area_um`` is carried as metadata only. The default efficiency is
    the module's peak responsivity, used as a stand-in for 810 nm efficiency.
    """

    name: str = "A"
    wavelength_min_nm: float = 350.0
    wavelength_max_nm: float = 900.0
    efficiency: float = 0.35
    dark_count_rate_hz: float = 0.0
    timing_jitter_ns: float = 1.0
    clock_offset_ns: int = 0
    propagation_delay_ns: int = 0
    active_area_um: float = 50.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_count_rate_hz < 0 or self.timing_jitter_ns < 0:
            raise ValueError("rates and jitter must be non-negative")
        if self.wavelength_min_nm > self.wavelength_max_nm:
            raise ValueError("empty wavelength range")


@dataclass(frozen=True)
class DetectionEvent:
    detector_id: str
    timestamp_ns: int
    photon_id: int | None = None
    pair_id: int | None = None

    @property
    def is_dark(self) -> bool:
        return self.photon_id is None

    @property
    def source(self) -> str:
        return "dark" if self.photon_id is None else f"photon:{self.photon_id}"

    def as_record(self) -> dict:
        return {
            "detector_id": self.detector_id,
            "timestamp_ns": self.timestamp_ns,
            "source": self.source,
            "pair_id": self.pair_id,
        }


@dataclass(frozen=True)
class CoincidenceWindow:
    tau_ns: int

    def __post_init__(self) -> None:
        if isinstance(self.tau_ns, bool) or int(self.tau_ns) != self.tau_ns or self.tau_ns < 0:
            raise ValueError("tau_ns must be a non-negative integer")


@dataclass
class EntangledPair:
    pair_id: int
    signal: Photon
    idler: Photon
    resolved: bool = False
    measurements: int = field(default=0, repr=False)

    def photon(self, which: Which) -> Photon:
        return self.signal if which is Which.SIGNAL else self.idler

    def partner(self, which: Which) -> Photon:
        return self.idler if which is Which.SIGNAL else self.signal


def idler_wavelength(pump_nm: float, signal_nm: float) -> float:
    """Idler wavelength from photon energy conservation."""
    if signal_nm == 2.0 * pump_nm:
        return signal_nm
    if not signal_nm > pump_nm:
        raise ValueError("signal wavelength must exceed the pump wavelength")
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


def generate_pairs(
    source: PumpSource,
    duration_ns: int,
    rng: RandomStream,
    signal_wavelength_nm: float | None = None,
    first_pair_id: int = 0,
) -> list[EntangledPair]:
    """Pairs emitted on ``[0, duration_ns)`` as a Poisson process at ``pair_rate_hz``."""
    signal_nm = 2.0 * source.wavelength_nm if signal_wavelength_nm is None else float(signal_wavelength_nm)
    idler_nm = idler_wavelength(source.wavelength_nm, signal_nm)
    pairs = []
    for k, t in enumerate(poisson_arrivals(rng, source.pair_rate_hz, duration_ns).tolist()):
        pid = first_pair_id + k
        pairs.append(
            EntangledPair(
                pid,
                Photon(2 * pid, t, signal_nm, None, pid),
                Photon(2 * pid + 1, t, idler_nm, None, pid),
            )
        )
    return pairs


def measure_entangled(
    pair: EntangledPair, which: Which, analyzer_deg: float, rng: RandomStream
) -> tuple[Port, EntangledPair]:
    """Measure one photon of ``pair`` on a two-port analyzer at ``analyzer_deg``.

    The first measurement is 50/50 at any analyzer angle and fixes the
    partner to the orthogonal polarization. Later measurements act on the
    definite states like any other analyzer. One uniform per call.
    """
    photon = pair.photon(which)
    photon.ensure_usable()
    pair.measurements += 1
    if pair.resolved:
        return analyzer_route(photon, analyzer_deg, rng), pair
    port = Port.TRANSMIT if rng.uniform() < 0.5 else Port.REFLECT
    along, across = PolarizationState(analyzer_deg), PolarizationState(analyzer_deg + 90.0)
    photon.polarization, pair.partner(which).polarization = (along, across) if port is Port.TRANSMIT else (across, along)
    pair.resolved = True
    return port, pair


def bandpass_filter(
    photon: Photon, center_nm: float = FILTER_CENTER_NM, bandwidth_nm: float = FILTER_BANDWIDTH_NM
) -> bool:
    """True (pass) iff the wavelength lies within half a bandwidth of the center."""
    return abs(photon.wavelength_nm - center_nm) <= bandwidth_nm / 2.0


def detect(photon: Photon, spec: DetectorSpec, rng: RandomStream) -> DetectionEvent | None:
    """Offer ``photon`` to a detector.

    Out-of-band photons produce nothing and draw nothing. In-band photons
    draw two uniforms (efficiency, then jitter) and, if registered, are
    consumed.
    """
    photon.ensure_usable()
    if not spec.wavelength_min_nm <= photon.wavelength_nm <= spec.wavelength_max_nm:
        return None
    hit = rng.uniform() < spec.efficiency
    jitter = rng.normal(0.0, spec.timing_jitter_ns)
    if not hit:
        return None
    photon.consumed = True
    stamp = photon.emit_time_ns + spec.propagation_delay_ns + spec.clock_offset_ns + int(round(jitter))
    return DetectionEvent(spec.name, stamp, photon.id, photon.pair_id)


def generate_dark_counts(spec: DetectorSpec, duration_ns: int, rng: RandomStream) -> list[DetectionEvent]:
    times = poisson_arrivals(rng, spec.dark_count_rate_hz, duration_ns) + spec.clock_offset_ns
    return [DetectionEvent(spec.name, t) for t in times.tolist()]


def sort_events(events) -> list[DetectionEvent]:
    """Stable time order, as a detector's event buffer would be read out."""
    return sorted(events, key=lambda e: e.timestamp_ns)


def _timestamps(events) -> np.ndarray:
    return np.fromiter((e.timestamp_ns for e in events), dtype=np.int64, count=len(events))


def find_coincidences(events_a, events_b, window: CoincidenceWindow) -> list[tuple[DetectionEvent, DetectionEvent]]:
    """Greedy earliest-first one-to-one coincidence matching.

    Each A event, in time order, pairs with the earliest unmatched B event
    within ``tau_ns``. The result does not depend on which stream is called A.
    """
    events_a = list(events_a)
    events_b = list(events_b)
    ta = _timestamps(events_a)
    tb = _timestamps(events_b)
    for label, t in (("A", ta), ("B", tb)):
        bad = kernels.first_unsorted(t)
        if bad >= 0:
            raise UnsortedInput(f"stream {label} is not sorted at position {bad}")
    ia, ib = kernels.greedy_match(ta, tb, window.tau_ns)
    return [(events_a[i], events_b[j]) for i, j in zip(ia.tolist(), ib.tolist())]


def share_arrival_times(local_events, channel: ClassicalChannel, sender: str = "bob") -> list[int]:
    """Publish local arrival times; returns the timestamps as the peer receives them.

    Only timing crosses the channel, never polarization outcomes.
    """
    start = len(channel.messages)
    for i, e in enumerate(local_events):
        channel.send(sender, "arrival_time", {"index": i, "timestamp_ns": int(e.timestamp_ns)})
    return [m.record["timestamp_ns"] for m in channel.receive("arrival_time", sender=sender, since=start)]


def accidental_coincidence_estimate(rate_a_hz: float, rate_b_hz: float, tau_ns: int, duration_ns: int) -> float:
    """Expected accidental coincidences of two independent Poisson streams.

    With integer timestamps the window admits ``2*tau + 1`` distinct offsets.
    """
    return rate_a_hz * rate_b_hz * (2 * tau_ns + 1) * 1e-9 * duration_ns * 1e-9


def true_coincidence_fraction(analyzer_a_deg: float, analyzer_b_deg: float) -> float:
    """Probability both photons of a pair pass absorbing analyzers (ideal detectors)."""
    return 0.5 * math.sin(math.radians(analyzer_a_deg - analyzer_b_deg)) ** 2


def _through_analyzer(pair: EntangledPair, which: Which, analyzer_deg: float | None, rng: RandomStream) -> bool:
    # absorbing polarizer: the reflect port is a trap
    if analyzer_deg is None:
        return True
    port, _ = measure_entangled(pair, which, analyzer_deg, rng)
    if port is Port.REFLECT:
        pair.photon(which).consumed = True
        return False
    return True


def detect_pairs(
    source: PumpSource,
    duration_ns: int,
    spec_a: DetectorSpec,
    spec_b: DetectorSpec,
    rng: RandomStream,
    *,
    analyzer_a_deg: float | None = None,
    analyzer_b_deg: float | None = None,
    signal_wavelength_nm: float | None = None,
) -> tuple[int, list[DetectionEvent], list[DetectionEvent]]:
    """Generate pairs and send signal to counter A, idler to counter B.

    Each arm is bandpass filter, optional polarizer, then detector. Dark
    counts are merged in and both event lists come back time-sorted.
    Returns ``(pairs_generated, events_a, events_b)``.
    """
    pairs = generate_pairs(source, duration_ns, rng.substream("spdc/pairs"), signal_wavelength_nm)
    pol_a = rng.substream(f"analyzer/{spec_a.name}")
    pol_b = rng.substream(f"analyzer/{spec_b.name}")
    det_a = rng.substream(f"detector/{spec_a.name}")
    det_b = rng.substream(f"detector/{spec_b.name}")
    events_a: list[DetectionEvent] = []
    events_b: list[DetectionEvent] = []
    for pair in pairs:
        arms = (
            (Which.SIGNAL, analyzer_a_deg, pol_a, spec_a, det_a, events_a),
            (Which.IDLER, analyzer_b_deg, pol_b, spec_b, det_b, events_b),
        )
        for which, angle, pol_rng, spec, det_rng, sink in arms:
            photon = pair.photon(which)
            if not bandpass_filter(photon) or not _through_analyzer(pair, which, angle, pol_rng):
                continue
            event = detect(photon, spec, det_rng)
            if event is not None:
                sink.append(event)
    events_a += generate_dark_counts(spec_a, duration_ns, rng.substream(f"dark/{spec_a.name}"))
    events_b += generate_dark_counts(spec_b, duration_ns, rng.substream(f"dark/{spec_b.name}"))
    return len(pairs), sort_events(events_a), sort_events(events_b)

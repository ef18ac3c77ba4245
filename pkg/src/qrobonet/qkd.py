"""BB84 polarization protocol with an intercept-resend eavesdropper.

Alice prepares one of four linear states with her half-wave plate. Bob
rotates with his own plate (0 degrees for ``+``, 22.5 degrees for ``x``) and
reads a polarizing beam splitter cube whose transmit port is sensor 0 and
reflect port is sensor 1. Bases, and later a sample of check bits, are
announced on a public :class:`~qrobonet.channel.ClassicalChannel`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ClassicalChannel
from .errors import EmptyKey, InvalidState, TranscriptLengthMismatch
from .photonics import Photon, PolarizationState, Port, hwp_rotate, pbs_route
from .rng import RandomStream


class Basis(enum.Enum):
    PLUS = "+"
    CROSS = "x"

    @property
    def code(self) -> int:
        return 0 if self is Basis.PLUS else 1

    @classmethod
    def from_code(cls, code: int) -> Basis:
        return cls.PLUS if int(code) == 0 else cls.CROSS


BOB_PLATE_DEG = {Basis.PLUS: 0.0, Basis.CROSS: 22.5}

_ENCODING = {
    (0, Basis.PLUS): 0.0,
    (1, Basis.PLUS): 90.0,
    (0, Basis.CROSS): -45.0,
    (1, Basis.CROSS): 45.0,
}
_DECODING = {angle: key for key, angle in _ENCODING.items()}

RANDOM_DISCARD = None


@dataclass(frozen=True)
class Table1Row:
    alice_state_deg: float
    alice_basis: Basis
    bob_basis: Basis
    result_deg: float | None  # None: random 0/90
    beam_splitter: str
    binary: int | None  # None: discard


TABLE1_ROWS: tuple[Table1Row, ...] = (
    Table1Row(0.0, Basis.PLUS, Basis.PLUS, 0.0, "Passes the light", 0),
    Table1Row(90.0, Basis.PLUS, Basis.PLUS, 90.0, "Reflects the light", 1),
    Table1Row(45.0, Basis.CROSS, Basis.PLUS, None, "50% reflects 50% passes light", None),
    Table1Row(-45.0, Basis.CROSS, Basis.PLUS, None, "50% reflects 50% passes light", None),
    Table1Row(0.0, Basis.PLUS, Basis.CROSS, None, "50% reflects 50% passes light", None),
    Table1Row(90.0, Basis.PLUS, Basis.CROSS, None, "50% reflects 50% passes light", None),
    Table1Row(45.0, Basis.CROSS, Basis.CROSS, 90.0, "Reflects the light", 1),
    Table1Row(-45.0, Basis.CROSS, Basis.CROSS, 0.0, "Passes the light", 0),
)


def alice_prepare(bit: int, basis: Basis) -> PolarizationState:
    try:
        return PolarizationState(_ENCODING[(int(bit), basis)])
    except KeyError:
        raise InvalidState(f"cannot encode bit {bit!r} in basis {basis!r}") from None


def decode_state(state_deg: float) -> tuple[int, Basis]:
    """Inverse of :func:`alice_prepare` for the four BB84 angles."""
    key = _DECODING.get(PolarizationState(state_deg).angle_deg)
    if key is None:
        raise InvalidState(f"{state_deg!r} is not a BB84 state")
    return key


def table1_result(alice_state_deg: float, bob_hwp_basis: Basis) -> int | None:
    """Binary result for a prepared state and Bob's basis; None is a random discard."""
    bit, basis = decode_state(alice_state_deg)
    return bit if basis is bob_hwp_basis else RANDOM_DISCARD


def bob_measure(photon: Photon, bob_basis: Basis, rng: RandomStream) -> int:
    """Bob's plate, cube and two sensors. The photon is trapped by a sensor."""
    pol = photon.definite_polarization()
    photon.polarization = hwp_rotate(pol, BOB_PLATE_DEG[bob_basis])
    port = pbs_route(photon, rng)
    photon.consumed = True
    return 1 if port is Port.REFLECT else 0


def eve_intercept_resend(
    photon: Photon, rng: RandomStream, basis: Basis | None = None
) -> tuple[Photon, int, Basis]:
    """Measure in a guessed basis and resend the state that was read.

    Draws the basis from ``rng`` unless one is supplied, then one uniform
    for the measurement.
    """
    if basis is None:
        basis = Basis.from_code(rng.bit())
    bit = bob_measure(photon, basis, rng)
    resent = Photon(photon.id, photon.emit_time_ns, photon.wavelength_nm, alice_prepare(bit, basis))
    return resent, bit, basis


@dataclass(frozen=True)
class AliceRecord:
    index: int
    bit: int
    basis: Basis
    state_deg: float


@dataclass(frozen=True)
class BobRecord:
    index: int
    basis: Basis
    outcome: int | None  # None when the photon never arrived


@dataclass(frozen=True)
class QkdRecord:
    index: int
    alice_bit: int
    alice_basis: Basis
    alice_state_deg: float
    bob_basis: Basis
    bob_outcome: int | None
    kept: bool
    publicly_compared: bool


@dataclass(frozen=True)
class SiftedKey:
    bits: tuple[int, ...] = ()
    source_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.bits) != len(self.source_indices):
            raise ValueError("bits and source_indices differ in length")

    def __len__(self) -> int:
        return len(self.bits)

    def bitstring(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class QberEstimate:
    qber: float
    eve_detected: bool
    compared_count: int
    mismatches: int
    compared_indices: tuple[int, ...]
    alice_key: SiftedKey
    bob_key: SiftedKey


def sift(
    alice_records, bob_records, public_channel: ClassicalChannel
) -> tuple[SiftedKey, SiftedKey]:
    """Basis reconciliation over the public channel.

    Alice announces every basis; Bob announces bases only for slots where a
    sensor fired. Each side keeps the slots where the announced bases agree.
    Returns ``(alice_key, bob_key)`` over the same indices.
    """
    alice_records = list(alice_records)
    bob_records = list(bob_records)
    if len(alice_records) != len(bob_records):
        raise TranscriptLengthMismatch(f"{len(alice_records)} Alice records vs {len(bob_records)} Bob records")
    start = len(public_channel.messages)
    for r in alice_records:
        public_channel.send("alice", "basis", {"index": r.index, "basis": r.basis.value})
    for r in bob_records:
        if r.outcome is not None:
            public_channel.send("bob", "basis", {"index": r.index, "basis": r.basis.value})

    announced = {"alice": {}, "bob": {}}
    for m in public_channel.receive("basis", since=start):
        announced[m.sender][m.record["index"]] = m.record["basis"]
    kept = sorted(i for i, b in announced["bob"].items() if announced["alice"].get(i) == b)

    alice_bits = {r.index: r.bit for r in alice_records}
    bob_bits = {r.index: r.outcome for r in bob_records}
    idx = tuple(kept)
    return (
        SiftedKey(tuple(alice_bits[i] for i in idx), idx),
        SiftedKey(tuple(bob_bits[i] for i in idx), idx),
    )


def estimate_qber(
    sifted_alice: SiftedKey,
    sifted_bob: SiftedKey,
    compare_fraction: float,
    rng: RandomStream,
    public_channel: ClassicalChannel,
    threshold: float = 0.05,
) -> QberEstimate:
    """Disclose a random sample of sifted bits, measure the error rate, drop the sample.

    The sample size is ``ceil(compare_fraction * len)`` (at least one bit).
    Eve is flagged when the disclosed error rate exceeds ``threshold``.
    """
    if not 0.0 < compare_fraction <= 1.0:
        raise ValueError("compare_fraction must lie in (0, 1]")
    if sifted_alice.source_indices != sifted_bob.source_indices:
        raise TranscriptLengthMismatch("sifted keys cover different indices")
    n = len(sifted_alice)
    if n == 0:
        raise EmptyKey("nothing survived sifting")
    k = min(n, max(1, math.ceil(compare_fraction * n)))
    positions = rng.sample_indices(n, k)
    start = len(public_channel.messages)
    for p in positions:
        public_channel.send("alice", "check_bit", {"index": sifted_alice.source_indices[p], "bit": sifted_alice.bits[p]})
    for p in positions:
        public_channel.send("bob", "check_bit", {"index": sifted_bob.source_indices[p], "bit": sifted_bob.bits[p]})

    disclosed = {"alice": {}, "bob": {}}
    for m in public_channel.receive("check_bit", since=start):
        disclosed[m.sender][m.record["index"]] = m.record["bit"]
    mismatches = sum(1 for i, b in disclosed["alice"].items() if disclosed["bob"][i] != b)
    qber = mismatches / k

    drop = set(disclosed["alice"])

    def remaining(key: SiftedKey) -> SiftedKey:
        keep = [(b, i) for b, i in zip(key.bits, key.source_indices) if i not in drop]
        return SiftedKey(tuple(b for b, _ in keep), tuple(i for _, i in keep))

    return QberEstimate(
        qber=qber,
        eve_detected=qber > threshold,
        compared_count=k,
        mismatches=mismatches,
        compared_indices=tuple(sorted(drop)),
        alice_key=remaining(sifted_alice),
        bob_key=remaining(sifted_bob),
    )


@dataclass(frozen=True)
class SessionConfig:
    photons: int
    eve_enabled: bool = False
    intercept_probability: float = 1.0
    compare_fraction: float = 0.5
    qber_threshold: float = 0.05

    def __post_init__(self) -> None:
        if self.photons < 0:
            raise ValueError("photons must be non-negative")
        if not 0.0 <= self.intercept_probability <= 1.0:
            raise ValueError("intercept_probability must lie in [0, 1]")
        if not 0.0 < self.compare_fraction <= 1.0:
            raise ValueError("compare_fraction must lie in (0, 1]")
        if not 0.0 <= self.qber_threshold <= 1.0:
            raise ValueError("qber_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class QkdSessionReport:
    photons_sent: int = 0
    photons_lost: int = 0
    eve_intercepts: int = 0
    sifted_length: int = 0
    compared_count: int = 0
    mismatches: int = 0
    qber: float = 0.0
    eve_detected: bool = False
    abort: bool = False
    final_key: SiftedKey = field(default_factory=SiftedKey)
    bob_final_key: SiftedKey = field(default_factory=SiftedKey)
    records: tuple[QkdRecord, ...] = field(default=(), repr=False)

    def summary(self) -> dict:
        return {
            "photons_sent": self.photons_sent,
            "photons_lost": self.photons_lost,
            "eve_intercepts": self.eve_intercepts,
            "sifted_length": self.sifted_length,
            "compared_count": self.compared_count,
            "mismatches": self.mismatches,
            "qber": self.qber,
            "eve_detected": self.eve_detected,
            "abort": self.abort,
            "final_key_length": len(self.final_key),
            "keys_match": self.final_key == self.bob_final_key,
        }


@dataclass(frozen=True)
class Transmission:
    """Raw per-slot arrays of one batch transmission (bases coded 0=+, 1=x)."""

    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_bits: np.ndarray  # -1 where the slot was lost
    eve_bits: np.ndarray  # -1 where Eve did not intercept
    eve_bases: np.ndarray


def transmit(
    n: int,
    rng: RandomStream,
    eve_enabled: bool = False,
    intercept_probability: float = 1.0,
    link_ok=None,
) -> Transmission:
    """Run the quantum stage for ``n`` photon slots.

    Each random role draws from its own named substream, one uniform per slot:
    ``alice/bits``, ``alice/bases``, ``bob/bases``, ``bob/pbs`` and, only when
    Eve is enabled, ``eve/intercept``, ``eve/bases``, ``eve/pbs``.
    """
    alice_bits = rng.substream("alice/bits").bits(n)
    alice_bases = rng.substream("alice/bases").bits(n)
    bob_bases = rng.substream("bob/bases").bits(n)
    u_bob = rng.substream("bob/pbs").uniforms(n)
    if eve_enabled:
        eve_on = rng.substream("eve/intercept").uniforms(n) < intercept_probability
        eve_bases = rng.substream("eve/bases").bits(n)
        u_eve = rng.substream("eve/pbs").uniforms(n)
    else:
        eve_on = np.zeros(n, dtype=bool)
        eve_bases = np.zeros(n, dtype=np.int8)
        u_eve = np.zeros(n)
    if link_ok is None:
        link_ok = np.ones(n, dtype=bool)
    elif len(link_ok) != n:
        raise TranscriptLengthMismatch("link availability mask must cover every slot")
    bob_bits, eve_bits = kernels.bb84_transmit(
        alice_bits, alice_bases, bob_bases, eve_on, eve_bases, u_eve, u_bob, link_ok
    )
    return Transmission(alice_bits, alice_bases, bob_bases, bob_bits, eve_bits, eve_bases)


def run_session(
    config: SessionConfig,
    rng: RandomStream,
    public_channel: ClassicalChannel | None = None,
    link_ok=None,
) -> QkdSessionReport:
    """Prepare, (intercept,) measure, sift, check and return the session outcome.

    ``link_ok`` optionally marks slots whose photon reached Bob; lost slots are
    never detected and drop out at sifting.
    """
    channel = public_channel if public_channel is not None else ClassicalChannel()
    n = config.photons
    if n == 0:
        return QkdSessionReport(abort=True)
    tx = transmit(n, rng, config.eve_enabled, config.intercept_probability, link_ok)

    alice = [
        AliceRecord(i, b, Basis.from_code(s), _ENCODING[(b, Basis.from_code(s))])
        for i, (b, s) in enumerate(zip(tx.alice_bits.tolist(), tx.alice_bases.tolist()))
    ]
    bob = [
        BobRecord(i, Basis.from_code(s), None if o < 0 else o)
        for i, (s, o) in enumerate(zip(tx.bob_bases.tolist(), tx.bob_bits.tolist()))
    ]
    alice_key, bob_key = sift(alice, bob, channel)
    lost = int(np.count_nonzero(tx.bob_bits < 0))
    intercepts = int(np.count_nonzero(tx.eve_bits >= 0))

    try:
        est = estimate_qber(
            alice_key, bob_key, config.compare_fraction, rng.substream("check/sample"),
            channel, config.qber_threshold,
        )
    except EmptyKey:
        est = None

    kept = set(alice_key.source_indices)
    compared = set(est.compared_indices) if est else set()
    records = tuple(
        QkdRecord(a.index, a.bit, a.basis, a.state_deg, b.basis, b.outcome, a.index in kept, a.index in compared)
        for a, b in zip(alice, bob)
    )
    if est is None:
        return QkdSessionReport(
            photons_sent=n, photons_lost=lost, eve_intercepts=intercepts, abort=True, records=records
        )
    return QkdSessionReport(
        photons_sent=n,
        photons_lost=lost,
        eve_intercepts=intercepts,
        sifted_length=len(alice_key),
        compared_count=est.compared_count,
        mismatches=est.mismatches,
        qber=est.qber,
        eve_detected=est.eve_detected,
        abort=est.eve_detected,
        # an aborted session's key is never used
        final_key=SiftedKey() if est.eve_detected else est.alice_key,
        bob_final_key=SiftedKey() if est.eve_detected else est.bob_key,
        records=records,
    )

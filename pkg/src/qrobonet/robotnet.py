"""Robots that act on key bits and on entanglement coincidences.

Key bits map to motion commands (1: constant-velocity translation along the
heading, 0: stop). A coincidence between the two robots' photon counters
dispatches the same task to both in the same tick, and can start a key
exchange whose bits then drive both robots.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

from .channel import ClassicalChannel
from .errors import StaleCoincidence, UnmappedBit
from .qkd import QkdSessionReport, SessionConfig, run_session
from .rng import RandomStream
from .spdc import (
    CoincidenceWindow, DetectionEvent, DetectorSpec, PumpSource, detect_pairs, find_coincidences,
    share_arrival_times,
)

Vec3 = tuple[float, float, float]


class Role(enum.Enum):
    ALICE = "alice"
    BOB = "bob"
    EVE = "eve"
    LEADER = "leader"


class Kind(enum.Enum):
    GROUND = "ground"
    AERIAL = "aerial"


@dataclass(frozen=True)
class Agent:
    id: str
    role: Role
    kind: Kind = Kind.GROUND
    pose: Vec3 = (0.0, 0.0, 0.0)
    heading_deg: float = 0.0
    velocity: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind is Kind.GROUND and (self.pose[2] != 0.0 or self.velocity[2] != 0.0):
            raise ValueError(f"ground agent {self.id!r} must stay at z = 0")


@dataclass(frozen=True)
class MoveConstantVelocity:
    speed_mps: float


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class Task:
    task_id: int


Command = Union[MoveConstantVelocity, Halt, Task]


def command_label(cmd: Command | None) -> str:
    if cmd is None:
        return "-"
    if isinstance(cmd, MoveConstantVelocity):
        return "Move"
    if isinstance(cmd, Halt):
        return "Halt"
    return f"Task({cmd.task_id})"


def parse_command(text: str, default_speed: float) -> Command:
    """``halt``, ``move``, ``move:<speed>`` or ``task:<id>``."""
    name, _, arg = str(text).strip().lower().partition(":")
    if name == "halt" and not arg:
        return Halt()
    if name == "move":
        return MoveConstantVelocity(float(arg) if arg else default_speed)
    if name == "task" and arg:
        return Task(int(arg))
    raise ValueError(f"unrecognised command {text!r}")


def default_mapping(speed_mps: float = 1.0) -> dict[int, Command]:
    return {1: MoveConstantVelocity(speed_mps), 0: Halt()}


def map_bit_to_command(bit: int, mapping: Mapping[int, Command] | None = None) -> Command:
    table = default_mapping() if mapping is None else mapping
    try:
        return table[int(bit)]
    except KeyError:
        raise UnmappedBit(f"no command mapped for bit {bit!r}") from None


def key_to_commands(bits: Sequence[int], mapping: Mapping[int, Command] | None = None) -> list[Command]:
    return [map_bit_to_command(b, mapping) for b in bits]


@dataclass(frozen=True)
class LinkModel:
    """Free-space optical link abstraction: range cutoff, pointing cone, random dropout."""

    max_range_m: float = 100.0
    max_pointing_error_deg: float = 180.0
    availability: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.availability <= 1.0:
            raise ValueError("availability must lie in [0, 1]")
        if self.max_range_m < 0 or self.max_pointing_error_deg < 0:
            raise ValueError("range and pointing tolerance must be non-negative")


def pointing_error_deg(tx: Agent, rx: Agent) -> float:
    dx = rx.pose[0] - tx.pose[0]
    dy = rx.pose[1] - tx.pose[1]
    if dx == 0.0 and dy == 0.0:
        return 0.0
    bearing = math.degrees(math.atan2(dy, dx))
    return abs((bearing - tx.heading_deg + 180.0) % 360.0 - 180.0)


def link_available(tx: Agent, rx: Agent, model: LinkModel, rng: RandomStream) -> bool:
    """Whether one photon slot gets from ``tx`` to ``rx``. Always consumes one uniform."""
    u = rng.uniform()
    if math.dist(tx.pose, rx.pose) > model.max_range_m:
        return False
    if pointing_error_deg(tx, rx) > model.max_pointing_error_deg:
        return False
    return u < model.availability


def _apply(agent: Agent, cmd: Command | None, dt_s: float) -> Agent:
    velocity = agent.velocity
    if isinstance(cmd, MoveConstantVelocity):
        h = math.radians(agent.heading_deg)
        velocity = (cmd.speed_mps * math.cos(h), cmd.speed_mps * math.sin(h), 0.0)
    elif isinstance(cmd, Halt):
        velocity = (0.0, 0.0, 0.0)
    pose = tuple(p + v * dt_s for p, v in zip(agent.pose, velocity))
    return replace(agent, pose=pose, velocity=velocity)


def step_world(agents: Sequence[Agent], commands: Mapping[str, Command], dt_s: float) -> list[Agent]:
    """Advance every agent by ``dt_s``.

    ``Move`` sets the velocity along the heading, ``Halt`` zeroes it, and
    ``Task`` or no command keeps the current velocity.
    """
    if not dt_s > 0:
        raise ValueError("dt_s must be positive")
    return [_apply(a, commands.get(a.id), dt_s) for a in agents]


@dataclass(frozen=True)
class TrajectoryRecord:
    tick: int
    agent_id: str
    x: float
    y: float
    z: float
    command: str

    def as_record(self) -> dict:
        return {"tick": self.tick, "agent_id": self.agent_id, "x": self.x, "y": self.y, "z": self.z,
                "command": self.command}


@dataclass(frozen=True)
class DispatchRecord:
    tick: int
    task_id: int
    robots: tuple[str, str]
    pair_id: int | None
    timestamps_ns: tuple[int, int]


@dataclass
class World:
    """Tick-ordered world; triggers queued between ticks execute on the next step."""

    agents: list[Agent]
    dt_s: float = 1.0
    tick: int = 0
    trajectory: list[TrajectoryRecord] = field(default_factory=list)
    task_log: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    dispatches: list[DispatchRecord] = field(default_factory=list)
    _pending: dict[str, list[int]] = field(default_factory=dict, repr=False)
    _dispatched: set = field(default_factory=set, repr=False)

    def __post_init__(self) -> None:
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        for i in ids:
            self.task_log.setdefault(i, [])

    def agent(self, agent_id: str) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def entanglement_trigger(
        self,
        coincidence: tuple[DetectionEvent, DetectionEvent],
        robot_a: str,
        robot_b: str,
        task_id: int,
    ) -> DispatchRecord:
        ea, eb = coincidence
        keys = {("events", ea, eb)}
        pair_id = ea.pair_id if ea.pair_id is not None and ea.pair_id == eb.pair_id else None
        if pair_id is not None:
            keys.add(("pair", pair_id))
        if keys & self._dispatched:
            raise StaleCoincidence(f"coincidence {ea.timestamp_ns}/{eb.timestamp_ns} already dispatched")
        self.agent(robot_a), self.agent(robot_b)
        self._dispatched |= keys
        for rid in (robot_a, robot_b):
            self._pending.setdefault(rid, []).append(task_id)
        record = DispatchRecord(self.tick, task_id, (robot_a, robot_b), pair_id, (ea.timestamp_ns, eb.timestamp_ns))
        self.dispatches.append(record)
        return record

    def step(self, commands: Mapping[str, Command] | None = None) -> None:
        commands = dict(commands or {})
        for rid, tasks in self._pending.items():
            for task_id in tasks:
                self.task_log[rid].append((task_id, self.tick))
            commands.setdefault(rid, Task(tasks[-1]))
        self._pending.clear()
        self.agents = step_world(self.agents, commands, self.dt_s)
        for a in self.agents:
            self.trajectory.append(TrajectoryRecord(self.tick, a.id, *a.pose, command_label(commands.get(a.id))))
        self.tick += 1

    def run(self, sequences: Mapping[str, Sequence[Command]], steps: int, fill: Command = Halt()) -> None:
        """Step ``steps`` times, feeding each agent its sequence; exhausted sequences use ``fill``."""
        for k in range(steps):
            self.step({aid: (seq[k] if k < len(seq) else fill) for aid, seq in sequences.items()})


@dataclass
class CombinedTranscript:
    pairs_generated: int = 0
    events_a: list[DetectionEvent] = field(default_factory=list)
    events_b: list[DetectionEvent] = field(default_factory=list)
    coincidences: list[tuple[DetectionEvent, DetectionEvent]] = field(default_factory=list)
    dispatch: DispatchRecord | None = None
    sessions: dict[str, QkdSessionReport] = field(default_factory=dict)
    commands: dict[str, list[str]] = field(default_factory=dict)
    aborted: bool = False
    world: World | None = None

    @property
    def session_started(self) -> bool:
        return bool(self.sessions)


def combined_scenario(
    *,
    source: PumpSource,
    duration_ns: int,
    spec_a: DetectorSpec,
    spec_b: DetectorSpec,
    window: CoincidenceWindow,
    session: SessionConfig,
    agents: Sequence[Agent],
    robot_a: str,
    robot_b: str,
    link: LinkModel,
    mapping: Mapping[int, Command],
    dt_s: float,
    horizon_steps: int,
    task_id: int,
    rng: RandomStream,
    channel: ClassicalChannel,
    key_policy: str = "pair",
    leader: str | None = None,
    signal_wavelength_nm: float | None = None,
) -> CombinedTranscript:
    """Entanglement trigger, then key exchange, then key-driven motion.

    The first coincidence dispatches ``task_id`` to both robots and starts
    a session: directly between the two robots (``key_policy="pair"``) or
    from ``leader`` to each robot in turn (``"leader"``). Each robot drives
    with its own copy of the key. If any session aborts, both robots halt
    for the whole horizon.
    """
    world = World(list(agents), dt_s)
    out = CombinedTranscript(world=world)
    out.pairs_generated, out.events_a, out.events_b = detect_pairs(
        source, duration_ns, spec_a, spec_b, rng, signal_wavelength_nm=signal_wavelength_nm
    )
    # B's counter publishes its arrival times so A can run the coincidence match
    share_arrival_times(out.events_b, channel, sender=robot_b)
    out.coincidences = find_coincidences(out.events_a, out.events_b, window)
    if not out.coincidences:
        world.run({}, horizon_steps)
        return out

    out.dispatch = world.entanglement_trigger(out.coincidences[0], robot_a, robot_b, task_id)
    world.step()

    if key_policy == "pair":
        links = [(robot_a, robot_a, robot_b)]
    elif key_policy == "leader":
        if leader is None:
            raise ValueError("leader policy requires a leader agent")
        links = [(robot_a, leader, robot_a), (robot_b, leader, robot_b)]
    else:
        raise ValueError(f"unknown key policy {key_policy!r}")

    keys: dict[str, tuple[int, ...]] = {}
    for label, tx_id, rx_id in links:
        tx, rx = world.agent(tx_id), world.agent(rx_id)
        link_rng = rng.substream(f"link/{tx_id}->{rx_id}")
        link_ok = [link_available(tx, rx, link, link_rng) for _ in range(session.photons)]
        report = run_session(session, rng.substream(f"qkd/{tx_id}->{rx_id}"), channel, link_ok)
        out.sessions[f"{tx_id}->{rx_id}"] = report
        out.aborted |= report.abort
        if key_policy == "pair":
            keys[robot_a] = report.final_key.bits
            keys[robot_b] = report.bob_final_key.bits
        else:
            keys[label] = report.bob_final_key.bits

    if out.aborted:
        sequences = {rid: [Halt()] * horizon_steps for rid in (robot_a, robot_b)}
    else:
        sequences = {rid: key_to_commands(keys[rid][:horizon_steps], mapping) for rid in (robot_a, robot_b)}
    world.run(sequences, horizon_steps)
    out.commands = {
        rid: [r.command for r in world.trajectory if r.agent_id == rid and r.tick >= 1]
        for rid in (robot_a, robot_b)
    }
    return out

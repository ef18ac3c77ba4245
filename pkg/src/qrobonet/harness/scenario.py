"""Scenario schema and loader.

A scenario is a YAML mapping. ``seed`` and ``experiment`` are required; every
other field has a default that is written back into the report, so a report
always shows the complete configuration it ran with. Unknown keys are errors.

Example::

    name: eve-check
    seed: 7
    experiment: qkd_session
    photon_count: 10000
    qkd:
      eve: {enabled: true}
"""
from __future__ import annotations

import dataclasses
import enum
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..errors import ParseError, ValidationError


class Experiment(enum.Enum):
    INTERFEROMETER = "interferometer"
    QKD_SESSION = "qkd_session"
    ENTANGLEMENT = "entanglement"
    COMBINED_ROBOTS = "combined_robots"


_EXPERIMENT_ALIASES = {
    "interferometer": Experiment.INTERFEROMETER,
    "qkdsession": Experiment.QKD_SESSION,
    "qkd": Experiment.QKD_SESSION,
    "entanglement": Experiment.ENTANGLEMENT,
    "combinedrobots": Experiment.COMBINED_ROBOTS,
    "combined": Experiment.COMBINED_ROBOTS,
    "robots": Experiment.COMBINED_ROBOTS,
}


@dataclass
class InterferometerParams:
    arm1_length: float = 1.0
    arm2_length: float = 1.0
    wavelength: float = 1.0
    delta: float | None = None  # overrides the arm-length phase difference
    arm2_blocked: bool = False
    splitter_amplitude: float = math.sqrt(0.5)


@dataclass
class EveParams:
    enabled: bool = False
    intercept_probability: float = 1.0


@dataclass
class QkdParams:
    eve: EveParams = field(default_factory=EveParams)
    compare_fraction: float = 0.5
    qber_threshold: float = 0.05


@dataclass
class DetectorParams:
    efficiency: float = 0.35
    dark_count_rate_hz: float = 100.0
    timing_jitter_ns: float = 1.0
    clock_offset_ns: int | None = None  # None: drawn uniformly in [-50, 50] at run time
    propagation_delay_ns: int = 0


@dataclass
class SpdcParams:
    pump_wavelength_nm: float = 405.0
    pump_power_mW: float = 100.0
    pair_rate_hz: float = 1e6
    duration_ns: int = 1_000_000
    tau_ns: int = 125
    signal_wavelength_nm: float | None = None
    analyzer_a_deg: float = 0.0
    analyzer_b_deg: float = 90.0
    detector_a: DetectorParams = field(default_factory=DetectorParams)
    detector_b: DetectorParams = field(default_factory=DetectorParams)


@dataclass
class AgentParams:
    id: str
    role: str
    kind: str = "ground"
    pose: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    heading_deg: float = 0.0


def _default_agents() -> list[AgentParams]:
    return [
        AgentParams("alice", "alice", "ground", [0.0, 0.0, 0.0], 0.0),
        AgentParams("bob", "bob", "ground", [10.0, 0.0, 0.0], 180.0),
    ]


@dataclass
class LinkParams:
    max_range_m: float = 100.0
    max_pointing_error_deg: float = 5.0
    availability: float = 1.0


@dataclass
class RobotParams:
    agents: list[AgentParams] = field(default_factory=_default_agents)
    pair: list[str] | None = None  # [robot_a, robot_b]; default: the alice and bob agents
    mapping: dict[int, str] = field(default_factory=lambda: {0: "halt", 1: "move"})
    speed_mps: float = 1.0
    link: LinkParams = field(default_factory=LinkParams)
    dt_s: float = 1.0
    horizon_steps: int = 16
    task_id: int = 1
    key_policy: str = "pair"


@dataclass
class Scenario:
    seed: int
    experiment: Experiment
    name: str = "unnamed"
    photon_count: int = 1000
    interferometer: InterferometerParams = field(default_factory=InterferometerParams)
    qkd: QkdParams = field(default_factory=QkdParams)
    spdc: SpdcParams = field(default_factory=SpdcParams)
    robots: RobotParams = field(default_factory=RobotParams)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["experiment"] = self.experiment.value
        return d

    def robot_pair(self) -> tuple[str, str]:
        if self.robots.pair is not None:
            return self.robots.pair[0], self.robots.pair[1]
        by_role = {a.role: a.id for a in self.robots.agents}
        return by_role.get("alice", ""), by_role.get("bob", "")

    def leader(self) -> str | None:
        return next((a.id for a in self.robots.agents if a.role == "leader"), None)


# ---------------------------------------------------------------- loading

_Lines = dict[str, int]


def _line_map(node, prefix: str = "", out: _Lines | None = None) -> _Lines:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _line_map(v, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = v.start_mark.line + 1
            _line_map(v, path, out)
    return out


def _fail(path: str, msg: str, lines: _Lines) -> ParseError:
    return ParseError(msg, line=lines.get(path), field=path)


def _convert(tp, value, path: str, lines: _Lines):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        inner = [a for a in args if a is not type(None)]
        if value is None:
            return None
        return _convert(inner[0], value, path, lines)
    if tp is Experiment:
        key = str(value).replace("_", "").replace("-", "").lower()
        if key not in _EXPERIMENT_ALIASES:
            raise _fail(path, f"unknown experiment {value!r}", lines)
        return _EXPERIMENT_ALIASES[key]
    if tp is bool:
        if not isinstance(value, bool):
            raise _fail(path, f"expected a boolean, got {value!r}", lines)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise _fail(path, f"expected an integer, got {value!r}", lines)
        return value
    if tp is float:
        if isinstance(value, str):
            try:
                value = float(value)  # YAML 1.1 reads 1e6 as a string
            except ValueError:
                raise _fail(path, f"expected a number, got {value!r}", lines) from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(path, f"expected a number, got {value!r}", lines)
        if not math.isfinite(value):
            raise _fail(path, "number must be finite", lines)
        return float(value)
    if tp is str:
        if not isinstance(value, (str, int)) or isinstance(value, bool):
            raise _fail(path, f"expected a string, got {value!r}", lines)
        return str(value)
    if origin is list:
        if not isinstance(value, list):
            raise _fail(path, f"expected a list, got {value!r}", lines)
        return [_convert(args[0], v, f"{path}[{i}]", lines) for i, v in enumerate(value)]
    if origin is dict:
        if not isinstance(value, dict):
            raise _fail(path, f"expected a mapping, got {value!r}", lines)
        return {
            _convert(args[0], k, f"{path}.{k}", lines): _convert(args[1], v, f"{path}.{k}", lines)
            for k, v in value.items()
        }
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path, lines)
    raise TypeError(f"unsupported schema type {tp!r}")  # pragma: no cover


def _build(cls, data, path: str, lines: _Lines):
    if not isinstance(data, dict):
        raise _fail(path or "<root>", f"expected a mapping, got {data!r}", lines)
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            sub = f"{path}.{key}" if path else str(key)
            raise _fail(sub, "unknown field", lines)
    kwargs = {}
    for name, f in fields.items():
        sub = f"{path}.{name}" if path else name
        if name in data:
            kwargs[name] = _convert(hints[name], data[name], sub, lines)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ValidationError(sub, "required field is missing")
    return cls(**kwargs)


def _check(cond: bool, field_path: str, msg: str) -> None:
    if not cond:
        raise ValidationError(field_path, msg)


def _prob(value: float, field_path: str) -> None:
    _check(0.0 <= value <= 1.0, field_path, f"probability {value!r} outside [0, 1]")


def validate(s: Scenario) -> Scenario:
    _check(0 <= s.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    _check(s.photon_count >= 0, "photon_count", "must be non-negative")

    i = s.interferometer
    _check(i.arm1_length > 0, "interferometer.arm1_length", "must be positive")
    _check(i.arm2_length > 0, "interferometer.arm2_length", "must be positive")
    _check(i.wavelength > 0, "interferometer.wavelength", "must be positive")
    _check(0 < i.splitter_amplitude**2 < 1, "interferometer.splitter_amplitude", "squared amplitude must lie in (0, 1)")

    q = s.qkd
    _prob(q.eve.intercept_probability, "qkd.eve.intercept_probability")
    _check(0 < q.compare_fraction <= 1, "qkd.compare_fraction", "must lie in (0, 1]")
    _prob(q.qber_threshold, "qkd.qber_threshold")

    p = s.spdc
    _check(p.pump_wavelength_nm > 0, "spdc.pump_wavelength_nm", "must be positive")
    _check(p.pair_rate_hz >= 0, "spdc.pair_rate_hz", "must be non-negative")
    _check(p.duration_ns >= 0, "spdc.duration_ns", "must be non-negative")
    _check(p.tau_ns >= 0, "spdc.tau_ns", "must be non-negative")
    if p.signal_wavelength_nm is not None:
        _check(p.signal_wavelength_nm > p.pump_wavelength_nm, "spdc.signal_wavelength_nm",
               "must exceed the pump wavelength")
    for side in ("detector_a", "detector_b"):
        d = getattr(p, side)
        _prob(d.efficiency, f"spdc.{side}.efficiency")
        _check(d.dark_count_rate_hz >= 0, f"spdc.{side}.dark_count_rate_hz", "must be non-negative")
        _check(d.timing_jitter_ns >= 0, f"spdc.{side}.timing_jitter_ns", "must be non-negative")

    r = s.robots
    ids = [a.id for a in r.agents]
    _check(len(ids) == len(set(ids)), "robots.agents", "agent ids must be unique")
    for k, a in enumerate(r.agents):
        _check(a.role in ("alice", "bob", "eve", "leader"), f"robots.agents[{k}].role", f"unknown role {a.role!r}")
        _check(a.kind in ("ground", "aerial"), f"robots.agents[{k}].kind", f"unknown kind {a.kind!r}")
        _check(len(a.pose) == 3, f"robots.agents[{k}].pose", "pose needs x, y, z")
        if a.kind == "ground":
            _check(a.pose[2] == 0.0, f"robots.agents[{k}].pose", "ground agents have z = 0")
    _prob(r.link.availability, "robots.link.availability")
    _check(r.link.max_range_m >= 0, "robots.link.max_range_m", "must be non-negative")
    _check(r.link.max_pointing_error_deg >= 0, "robots.link.max_pointing_error_deg", "must be non-negative")
    _check(r.dt_s > 0, "robots.dt_s", "must be positive")
    _check(r.horizon_steps >= 0, "robots.horizon_steps", "must be non-negative")
    _check(r.key_policy in ("pair", "leader"), "robots.key_policy", "must be 'pair' or 'leader'")
    from ..robotnet import parse_command

    _check(set(r.mapping) <= {0, 1}, "robots.mapping", "keys must be bits 0 and 1")
    for bit, text in r.mapping.items():
        try:
            parse_command(text, r.speed_mps)
        except ValueError as exc:
            raise ValidationError(f"robots.mapping.{bit}", str(exc)) from None
    if s.experiment is Experiment.COMBINED_ROBOTS:
        a_id, b_id = s.robot_pair()
        _check(r.pair is None or len(r.pair) == 2, "robots.pair", "must name exactly two agents")
        _check(a_id in ids and b_id in ids and a_id != b_id, "robots.pair", "must name two distinct agents")
        if r.key_policy == "leader":
            _check(s.leader() is not None, "robots.key_policy", "leader policy needs an agent with role 'leader'")
    return s


def scenario_from_dict(data: Any, lines: _Lines | None = None) -> Scenario:
    return validate(_build(Scenario, data, "", lines or {}))


def parse_scenario_text(text: str) -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(getattr(exc, "problem", None) or exc), line=mark.line + 1 if mark else None) from None
    if data is None:
        data = {}
    return scenario_from_dict(data, _line_map(node) if node is not None else {})


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))

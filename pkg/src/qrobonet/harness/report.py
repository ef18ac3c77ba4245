"""Report documents and event logs with byte-stable serialization.

Floats are rounded to 12 significant digits before encoding and all mappings
are written with sorted keys, so a report is a pure function of its content.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SIGNIFICANT_DIGITS = 12
EVENT_LOG_NAME = "events.ndjson"


def canonical(value: Any) -> Any:
    """Normalize a value tree for stable JSON: rounded floats, lists, plain enums."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value!r}")
        rounded = float(f"{value:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if rounded == 0.0 else rounded
    if isinstance(value, enum.Enum):
        return canonical(value.value)
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return canonical(value.item())
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(value: Any) -> str:
    return json.dumps(canonical(value), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _line(value: Any) -> str:
    return json.dumps(canonical(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class EventLog:
    """Newline-delimited records ``{t, stream, type, payload}``."""

    events: list[dict[str, Any]] = field(default_factory=list)

    def add(self, t: int, stream: str, type: str, payload: dict[str, Any] | None = None) -> None:
        self.events.append({"t": t, "stream": stream, "type": type, "payload": payload or {}})

    def __len__(self) -> int:
        return len(self.events)

    def to_bytes(self) -> bytes:
        return "".join(_line(e) + "\n" for e in self.events).encode("utf-8")

    def sha256(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    @classmethod
    def from_bytes(cls, data: bytes) -> EventLog:
        return cls([json.loads(line) for line in data.decode("utf-8").splitlines() if line])


@dataclass
class SimulationReport:
    name: str = ""
    seed: int = 0
    experiment: str = ""
    status: str = "ok"
    exit_code: int = 0
    summary: dict[str, Any] = field(default_factory=dict)
    scenario: dict[str, Any] = field(default_factory=dict)
    rng_draws: dict[str, int] = field(default_factory=dict)
    event_log: str = EVENT_LOG_NAME
    event_count: int = 0
    events_sha256: str = ""
    events: EventLog = field(default_factory=EventLog, repr=False, compare=False)

    def attach(self, events: EventLog) -> None:
        self.events = events
        self.event_count = len(events)
        self.events_sha256 = events.sha256()

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "seed": self.seed,
            "experiment": self.experiment,
            "status": self.status,
            "exit_code": self.exit_code,
            "summary": self.summary,
            "scenario": self.scenario,
            "rng_draws": self.rng_draws,
            "event_log": self.event_log,
            "event_count": self.event_count,
            "events_sha256": self.events_sha256,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SimulationReport:
        return cls(**d)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> SimulationReport:
        return cls.from_dict(json.loads(text))


def flatten(d: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in d.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict):
            out.update(flatten(v, key))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(canonical(v), separators=(",", ":"))
        else:
            out[key] = canonical(v)
    return out


def _csv_text(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_report(
    report: SimulationReport, out_dir: str | Path, fmt: str = "json"
) -> list[Path]:
    """Write the report (``report.json`` or ``report.csv``) and its event log."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt == "json":
        p = out / "report.json"
        p.write_text(report.to_json(), encoding="utf-8")
    elif fmt == "csv":
        p = out / "report.csv"
        flat = flatten(report.to_dict())
        p.write_text(_csv_text(["key", "value"], [[k, flat[k]] for k in sorted(flat)]), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    paths.append(p)
    e = out / report.event_log
    e.write_bytes(report.events.to_bytes())
    paths.append(e)
    return paths


def write_sweep_csv(param: str, rows: list[tuple[float, dict[str, Any]]], path: str | Path) -> Path:
    """One row per sweep point, in the given order; numeric and boolean summary columns only."""
    flats = [flatten(summary) for _, summary in rows]
    keys = sorted({k for f in flats for k, v in f.items() if isinstance(v, (int, float, bool)) and v is not None})
    table = [[canonical(float(x))] + [f.get(k, "") for k in keys] for (x, _), f in zip(rows, flats)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_csv_text([param] + keys, table), encoding="utf-8")
    return path

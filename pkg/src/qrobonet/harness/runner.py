"""Execute a validated scenario and collect its report and event log."""
from __future__ import annotations

import hashlib
import logging
import traceback

from ..channel import ClassicalChannel
from ..interferometer import MachZehnderConfig, detection_probability, sample_outcomes
from ..photonics import Photon
from ..qkd import SessionConfig, run_session
from ..rng import RandomStream
from ..robotnet import Agent, Kind, LinkModel, Role, combined_scenario, parse_command
from ..spdc import (
    CoincidenceWindow, DetectorSpec, PumpSource, accidental_coincidence_estimate, bandpass_filter,
    detect_pairs, find_coincidences, idler_wavelength, share_arrival_times, true_coincidence_fraction,
)
from .report import EventLog, SimulationReport
from .scenario import Experiment, Scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ABORT = 3
EXIT_INTERNAL = 4

CLOCK_OFFSET_SPAN_NS = 50


def _log_channel(events: EventLog, channel: ClassicalChannel, start: int = 0) -> None:
    for m in channel.messages[start:]:
        events.add(m.seq, f"channel/{channel.name}", m.kind, {"sender": m.sender, "record": m.record})


def _log_detections(events: EventLog, evs) -> None:
    for e in evs:
        events.add(e.timestamp_ns, f"detector/{e.detector_id}", "detection", e.as_record())


def _detectors(s: Scenario, rng: RandomStream) -> tuple[DetectorSpec, DetectorSpec]:
    clock = rng.substream("clock")
    specs = []
    for name, d in (("A", s.spdc.detector_a), ("B", s.spdc.detector_b)):
        offset = d.clock_offset_ns
        if offset is None:
            offset = int(round(-CLOCK_OFFSET_SPAN_NS + 2 * CLOCK_OFFSET_SPAN_NS * clock.uniform()))
        specs.append(DetectorSpec(
            name=name, efficiency=d.efficiency, dark_count_rate_hz=d.dark_count_rate_hz,
            timing_jitter_ns=d.timing_jitter_ns, clock_offset_ns=offset,
            propagation_delay_ns=d.propagation_delay_ns,
        ))
    return specs[0], specs[1]


def _pump(s: Scenario) -> PumpSource:
    return PumpSource(s.spdc.pump_wavelength_nm, s.spdc.pump_power_mW, s.spdc.pair_rate_hz)


def _session(s: Scenario) -> SessionConfig:
    q = s.qkd
    return SessionConfig(s.photon_count, q.eve.enabled, q.eve.intercept_probability, q.compare_fraction, q.qber_threshold)


def _key_digest(bits) -> str:
    return hashlib.sha256("".join(map(str, bits)).encode()).hexdigest()


def _run_interferometer(s: Scenario, rng: RandomStream, events: EventLog) -> tuple[dict, int]:
    p = s.interferometer
    cfg = MachZehnderConfig(p.arm1_length, p.arm2_length, p.wavelength, p.arm2_blocked, p.splitter_amplitude, p.delta)
    dist = detection_probability(cfg)
    counts = sample_outcomes(dist, s.photon_count, rng.substream("interferometer/photons"))
    n = s.photon_count
    summary = {
        "delta": None if p.arm2_blocked else cfg.phase_difference(),
        "p_detector_B": dist.p_detector_B,
        "p_detector_C": dist.p_detector_C,
        "p_absorbed": dist.p_absorbed,
        "photons": n,
        "count_B": counts.detector_B,
        "count_C": counts.detector_C,
        "count_absorbed": counts.absorbed,
        "fraction_B": counts.detector_B / n if n else 0.0,
        "fraction_C": counts.detector_C / n if n else 0.0,
        "fraction_absorbed": counts.absorbed / n if n else 0.0,
    }
    events.add(0, "interferometer/photons", "counts",
               {"B": counts.detector_B, "C": counts.detector_C, "absorbed": counts.absorbed})
    return summary, EXIT_OK


def _run_qkd(s: Scenario, rng: RandomStream, events: EventLog) -> tuple[dict, int]:
    channel = ClassicalChannel()
    report = run_session(_session(s), rng.substream("qkd"), channel)
    _log_channel(events, channel)
    summary = report.summary()
    summary["final_key_sha256"] = _key_digest(report.final_key.bits)
    return summary, EXIT_ABORT if report.abort else EXIT_OK


def _run_entanglement(s: Scenario, rng: RandomStream, events: EventLog) -> tuple[dict, int]:
    p = s.spdc
    spec_a, spec_b = _detectors(s, rng)
    pairs, ev_a, ev_b = detect_pairs(
        _pump(s), p.duration_ns, spec_a, spec_b, rng,
        analyzer_a_deg=p.analyzer_a_deg, analyzer_b_deg=p.analyzer_b_deg,
        signal_wavelength_nm=p.signal_wavelength_nm,
    )
    channel = ClassicalChannel()
    share_arrival_times(ev_b, channel, sender="B")
    coincidences = find_coincidences(ev_a, ev_b, CoincidenceWindow(p.tau_ns))
    _log_detections(events, ev_a)
    _log_detections(events, ev_b)
    _log_channel(events, channel)
    for a, b in coincidences:
        events.add(a.timestamp_ns, "coincidence", "coincidence",
                   {"a": a.as_record(), "b": b.as_record()})

    true_hits = sum(1 for a, b in coincidences if a.pair_id is not None and a.pair_id == b.pair_id)
    signal_nm = 2 * p.pump_wavelength_nm if p.signal_wavelength_nm is None else p.signal_wavelength_nm
    idler_nm = idler_wavelength(p.pump_wavelength_nm, signal_nm)
    passes = all(bandpass_filter(Photon(0, 0, nm, None, 0)) for nm in (signal_nm, idler_nm))
    seconds = p.duration_ns * 1e-9
    singles_a, singles_b = len(ev_a), len(ev_b)
    summary = {
        "pairs_generated": pairs,
        "signal_wavelength_nm": signal_nm,
        "idler_wavelength_nm": idler_nm,
        "clock_offset_a_ns": spec_a.clock_offset_ns,
        "clock_offset_b_ns": spec_b.clock_offset_ns,
        "singles_a": singles_a,
        "singles_b": singles_b,
        "dark_a": sum(e.is_dark for e in ev_a),
        "dark_b": sum(e.is_dark for e in ev_b),
        "coincidences": len(coincidences),
        "true_coincidences": true_hits,
        "accidental_coincidences": len(coincidences) - true_hits,
        "predicted_true_coincidences": (
            pairs * spec_a.efficiency * spec_b.efficiency
            * true_coincidence_fraction(p.analyzer_a_deg, p.analyzer_b_deg) if passes else 0.0
        ),
        "predicted_accidental_coincidences": (
            accidental_coincidence_estimate(singles_a / seconds, singles_b / seconds, p.tau_ns, p.duration_ns)
            if seconds > 0 else 0.0
        ),
    }
    return summary, EXIT_OK


def _agents(s: Scenario) -> list[Agent]:
    return [Agent(a.id, Role(a.role), Kind(a.kind), tuple(a.pose), a.heading_deg) for a in s.robots.agents]


def _run_combined(s: Scenario, rng: RandomStream, events: EventLog) -> tuple[dict, int]:
    r = s.robots
    spec_a, spec_b = _detectors(s, rng)
    robot_a, robot_b = s.robot_pair()
    channel = ClassicalChannel()
    out = combined_scenario(
        source=_pump(s), duration_ns=s.spdc.duration_ns, spec_a=spec_a, spec_b=spec_b,
        window=CoincidenceWindow(s.spdc.tau_ns), session=_session(s), agents=_agents(s),
        robot_a=robot_a, robot_b=robot_b,
        link=LinkModel(r.link.max_range_m, r.link.max_pointing_error_deg, r.link.availability),
        mapping={bit: parse_command(text, r.speed_mps) for bit, text in r.mapping.items()},
        dt_s=r.dt_s, horizon_steps=r.horizon_steps, task_id=r.task_id, rng=rng, channel=channel,
        key_policy=r.key_policy, leader=s.leader(), signal_wavelength_nm=s.spdc.signal_wavelength_nm,
    )
    _log_detections(events, out.events_a)
    _log_detections(events, out.events_b)
    if out.dispatch is not None:
        d = out.dispatch
        events.add(d.tick, "robots", "entanglement_trigger",
                   {"task_id": d.task_id, "robots": list(d.robots), "pair_id": d.pair_id,
                    "timestamps_ns": list(d.timestamps_ns)})
    _log_channel(events, channel)
    world = out.world
    for rec in world.trajectory:
        events.add(rec.tick, f"robot/{rec.agent_id}", "pose", rec.as_record())

    traj = "".join(f"{t.tick},{t.agent_id},{t.x!r},{t.y!r},{t.z!r},{t.command}\n" for t in world.trajectory)
    summary = {
        "pairs_generated": out.pairs_generated,
        "coincidences": len(out.coincidences),
        "session_started": out.session_started,
        "dispatch": None if out.dispatch is None else {
            "tick": out.dispatch.tick, "task_id": out.dispatch.task_id,
            "robots": list(out.dispatch.robots), "pair_id": out.dispatch.pair_id,
        },
        "sessions": {name: rep.summary() for name, rep in out.sessions.items()},
        "aborted": out.aborted,
        "commands": out.commands,
        "same_command_sequence": len(set(map(tuple, out.commands.values()))) <= 1,
        "task_log": {k: [list(e) for e in v] for k, v in world.task_log.items()},
        "final_poses": {a.id: list(a.pose) for a in world.agents},
        "ticks": world.tick,
        "trajectory_sha256": hashlib.sha256(traj.encode()).hexdigest(),
    }
    return summary, EXIT_ABORT if out.aborted else EXIT_OK


_RUNNERS = {
    Experiment.INTERFEROMETER: _run_interferometer,
    Experiment.QKD_SESSION: _run_qkd,
    Experiment.ENTANGLEMENT: _run_entanglement,
    Experiment.COMBINED_ROBOTS: _run_combined,
}


def run_scenario(s: Scenario) -> SimulationReport:
    """Run ``s`` and return its report, with the event log attached.

    Failures inside the experiment are caught and recorded with
    ``status="error"`` and exit code 4 rather than raised.
    """
    rng = RandomStream(s.seed, "root")
    events = EventLog()
    report = SimulationReport(name=s.name, seed=s.seed, experiment=s.experiment.value, scenario=s.to_dict())
    try:
        report.summary, report.exit_code = _RUNNERS[s.experiment](s, rng, events)
        report.status = "abort" if report.exit_code == EXIT_ABORT else "ok"
    except Exception as exc:  # report, don't crash the harness
        log.debug("scenario %s failed", s.name, exc_info=True)
        report.status = "error"
        report.exit_code = EXIT_INTERNAL
        report.summary = {"error": f"{type(exc).__name__}: {exc}",
                          "traceback_tail": traceback.format_exception_only(type(exc), exc)[-1].strip()}
    report.rng_draws = rng.draw_counts()
    for name, count in report.rng_draws.items():
        events.add(0, name, "rng_draws", {"count": count})
    report.attach(events)
    return report

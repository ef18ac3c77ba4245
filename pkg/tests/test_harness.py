import csv
import json
import math
from pathlib import Path

import pytest

from qrobonet.channel import ClassicalChannel, Message, decode_frames, encode_frame
from qrobonet.errors import ChannelClosed, ParseError, ValidationError
from qrobonet.harness import load_scenario, run_scenario, scenario_from_dict, write_report
from qrobonet.harness.cli import main
from qrobonet.harness.report import EventLog, SimulationReport, canonical
from qrobonet.harness.scenario import Experiment, parse_scenario_text

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def test_minimal_scenario_defaults():
    s = parse_scenario_text("seed: 1\nexperiment: interferometer\n")
    assert s.photon_count == 1000 and s.qkd.compare_fraction == 0.5 and s.spdc.tau_ns == 125
    assert s.robots.mapping == {0: "halt", 1: "move"}
    # defaults are echoed in the report
    rep = run_scenario(s)
    assert rep.scenario["spdc"]["detector_a"]["efficiency"] == 0.35


def test_missing_seed():
    with pytest.raises(ValidationError) as e:
        parse_scenario_text("experiment: qkd\n")
    assert e.value.field == "seed"


def test_availability_out_of_range():
    with pytest.raises(ValidationError) as e:
        parse_scenario_text("seed: 1\nexperiment: combined\nrobots:\n  link:\n    availability: 1.2\n")
    assert "availability" in e.value.field


@pytest.mark.parametrize("text,line,field", [
    ("seed: 1\nexperiment: qkd\nphoton_count: many\n", 3, "photon_count"),
    ("seed: 1\nexperiment: qkd\nqkd:\n  eve:\n    enabled: yes please\n", 5, "qkd.eve.enabled"),
    ("seed: 1\nexperiment: qkd\nbogus: 3\n", 3, "bogus"),
    ("seed: 1\nexperiment: teleport\n", 2, "experiment"),
])
def test_parse_errors_carry_line_and_field(text, line, field):
    with pytest.raises(ParseError) as e:
        parse_scenario_text(text)
    assert e.value.line == line and e.value.field == field
    assert f"line {line}" in str(e.value)


def test_yaml_syntax_error():
    with pytest.raises(ParseError):
        parse_scenario_text("seed: [1\n")


def test_duplicate_agents_rejected():
    data = {"seed": 1, "experiment": "combined",
            "robots": {"agents": [{"id": "a", "role": "alice"}, {"id": "a", "role": "bob"}]}}
    with pytest.raises(ValidationError):
        scenario_from_dict(data)


def test_scientific_notation_rate():
    s = parse_scenario_text("seed: 1\nexperiment: entanglement\nspdc:\n  pair_rate_hz: 1e6\n")
    assert s.spdc.pair_rate_hz == 1e6


def test_experiment_aliases():
    for name, exp in [("QkdSession", Experiment.QKD_SESSION), ("combined_robots", Experiment.COMBINED_ROBOTS),
                      ("Entanglement", Experiment.ENTANGLEMENT)]:
        assert scenario_from_dict({"seed": 0, "experiment": name}).experiment is exp


def test_interferometer_report():
    rep = run_scenario(scenario_from_dict({"seed": 1, "experiment": "interferometer", "interferometer": {"delta": 0.0}}))
    assert rep.summary["count_B"] == 1000 and rep.exit_code == 0


def test_qkd_eve_report():
    rep = run_scenario(scenario_from_dict({"seed": 2, "experiment": "qkd", "photon_count": 10_000,
                                           "qkd": {"eve": {"enabled": True}}}))
    assert 0.22 <= rep.summary["qber"] <= 0.28
    assert rep.summary["eve_detected"] and rep.status == "abort" and rep.exit_code == 3


def test_report_deterministic_and_draws_logged():
    s = load_scenario(SCENARIOS / "combined.yaml")
    a, b = run_scenario(s), run_scenario(s)
    assert a.to_json() == b.to_json() and a.events.to_bytes() == b.events.to_bytes()
    logged = {e["stream"]: e["payload"]["count"] for e in a.events.events if e["type"] == "rng_draws"}
    assert logged == a.rng_draws
    assert sum(a.rng_draws.values()) > 0


def test_empty_report_and_round_trip():
    empty = SimulationReport()
    assert json.loads(empty.to_json())["summary"] == {}
    rep = run_scenario(load_scenario(SCENARIOS / "qkd_clean.yaml"))
    text = rep.to_json()
    assert SimulationReport.from_json(text).to_json() == text
    log = rep.events.to_bytes()
    assert EventLog.from_bytes(log).to_bytes() == log


def test_canonical_floats():
    assert canonical(0.1 + 0.2) == 0.3
    assert canonical(-0.0) == 0.0 and math.copysign(1, canonical(-0.0)) == 1
    with pytest.raises(ValueError):
        canonical(float("nan"))


def test_write_report_formats(tmp_path):
    rep = run_scenario(load_scenario(SCENARIOS / "interferometer.yaml"))
    paths = write_report(rep, tmp_path / "j")
    assert [p.name for p in paths] == ["report.json", "events.ndjson"]
    assert json.loads(paths[0].read_text())["events_sha256"] == rep.events.sha256()
    paths = write_report(rep, tmp_path / "c", fmt="csv")
    rows = list(csv.reader(paths[0].open()))
    assert rows[0] == ["key", "value"] and ["summary.count_B", str(rep.summary["count_B"])] in rows
    with pytest.raises(ValueError):
        write_report(rep, tmp_path / "x", fmt="xml")


def test_internal_error_reported(monkeypatch):
    from qrobonet.harness import runner

    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setitem(runner._RUNNERS, Experiment.INTERFEROMETER, boom)
    rep = run_scenario(scenario_from_dict({"seed": 1, "experiment": "interferometer"}))
    assert rep.status == "error" and rep.exit_code == 4 and "kaput" in rep.summary["error"]


def test_cli_run_exit_codes(tmp_path, capsys):
    assert main(["run", "--scenario", str(SCENARIOS / "qkd_clean.yaml"), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--scenario", str(SCENARIOS / "qkd_eve.yaml"), "--out", str(tmp_path / "b")]) == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: 1\nexperiment: qkd\nqkd:\n  compare_fraction: 2\n")
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "c")]) == 2
    assert "compare_fraction" in capsys.readouterr().err


def test_cli_seed_override(tmp_path):
    main(["run", "--scenario", str(SCENARIOS / "qkd_clean.yaml"), "--out", str(tmp_path / "a"), "--seed", "5"])
    main(["run", "--scenario", str(SCENARIOS / "qkd_clean.yaml"), "--out", str(tmp_path / "b"), "--seed", "6"])
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert a["seed"] == 5 and b["seed"] == 6 and a["events_sha256"] != b["events_sha256"]


def test_cli_sweep(tmp_path, capsys):
    code = main(["sweep", "--scenario", str(SCENARIOS / "interferometer.yaml"), "--param", "interferometer.delta",
                 "--linspace", f"0,{2 * math.pi},20", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    deltas = [float(r["interferometer.delta"]) for r in rows]
    assert len(rows) == 20 and deltas == sorted(deltas)
    assert rows[0]["count_B"] == "100000" and rows[-1]["count_B"] == "100000"
    assert main(["sweep", "--scenario", str(SCENARIOS / "qkd_clean.yaml"), "--param", "qkd.eve.enabled",
                 "--values", "false,true", "--out", str(tmp_path / "e")]) == 0
    rows = list(csv.DictReader((tmp_path / "e" / "sweep.csv").open()))
    assert [r["eve_detected"] for r in rows] == ["False", "True"]


def test_cli_sweep_invalid_value(tmp_path, capsys):
    assert main(["sweep", "--scenario", str(SCENARIOS / "qkd_clean.yaml"), "--param", "qkd.compare_fraction",
                 "--values", "0.5,3", "--out", str(tmp_path)]) == 2


def test_cli_table1_and_selftest(capsys):
    assert main(["table1", "--trials", "20000"]) == 0
    assert capsys.readouterr().out.count("[PASS]") == 8
    assert main(["selftest", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "checks passed" in out


def test_channel_framing_round_trip():
    ch = ClassicalChannel()
    ch.send("alice", "basis", {"index": 0, "basis": "+"})
    ch.send("bob", "check_bit", {"index": 3, "bit": 1})
    assert list(decode_frames(ch.wire_bytes())) == ch.messages
    assert encode_frame(Message(0, "a", "k", {}))[:4] == len(b'{"kind":"k","record":{},"sender":"a","seq":0}').to_bytes(4, "big")
    with pytest.raises(ValueError):
        list(decode_frames(ch.wire_bytes()[:-1]))
    assert [m.sender for m in ch.receive("basis")] == ["alice"]
    ch.close()
    with pytest.raises(ChannelClosed):
        ch.send("alice", "basis", {})

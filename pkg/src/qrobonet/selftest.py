"""Built-in verification used by the ``table1`` and ``selftest`` subcommands.

These checks run without pytest so an installed copy can verify itself. The
test suite carries its own, independent oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ClassicalChannel
from .interferometer import MachZehnderConfig, detection_probability, simulate_stream
from .photonics import Photon, PolarizationState, hwp_rotate, malus_probability, pbs_route
from .qkd import TABLE1_ROWS, Basis, SessionConfig, Table1Row, bob_measure, estimate_qber, run_session, table1_result, transmit
from .rng import RandomStream
from .robotnet import World, default_mapping, key_to_commands
from .spdc import (
    CoincidenceWindow, DetectionEvent, PumpSource, Which, find_coincidences, generate_pairs, measure_entangled,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _binomial_ok(hits: int, n: int, p: float, tol: float) -> bool:
    # small samples get at least a 5 sigma band
    tol = max(tol, 5.0 * math.sqrt(p * (1.0 - p) / n))
    return abs(hits / n - p) <= tol


def verify_table1_row(row: Table1Row, trials: int, rng: RandomStream) -> Check:
    label = f"|{row.alice_state_deg:g}°⟩({row.alice_basis.value}) vs Bob({row.bob_basis.value})"
    table_ok = table1_result(row.alice_state_deg, row.bob_basis) == row.binary
    ones = 0
    for i in range(trials):
        photon = Photon(i, polarization=PolarizationState(row.alice_state_deg))
        ones += bob_measure(photon, row.bob_basis, rng)
    if row.binary is None:
        ok = table_ok and _binomial_ok(ones, trials, 0.5, 0.01)
        detail = f"random, sensor-1 fraction {ones / trials:.4f} (0.5 ± 0.01)"
    else:
        ok = table_ok and ones == row.binary * trials
        detail = f"binary {row.binary}, {trials}/{trials} trials" if ok else f"expected {row.binary}, got {ones} ones"
    return Check(label, ok, detail)


def verify_table1(trials: int = 100_000, seed: int = 0) -> list[Check]:
    rng = RandomStream(seed, "table1")
    return [verify_table1_row(row, trials, rng.substream(f"row{k}")) for k, row in enumerate(TABLE1_ROWS)]


def _brute_force(ta: list[int], tb: list[int], tau: int) -> list[tuple[int, int]]:
    used = [False] * len(tb)
    out = []
    for i, t in enumerate(ta):
        for j, u in enumerate(tb):
            if not used[j] and abs(t - u) <= tau:
                used[j] = True
                out.append((i, j))
                break
    return out


def run_selftest(quick: bool = False, seed: int = 12345) -> list[Check]:
    """Invariant checks; ``quick`` shrinks sample sizes about tenfold."""
    n = 10_000 if quick else 100_000
    root = RandomStream(seed, "selftest")
    checks: list[Check] = []

    checks += verify_table1(n // 10 if quick else n, seed)

    worst = 0.0
    for k in range(36):
        t, a1, a2 = k * 22.5, (k % 7) * 22.5, (k % 5) * 11.25
        worst = max(worst, abs(hwp_rotate(hwp_rotate(PolarizationState(t), a1), a2).angle_deg
                               - hwp_rotate(PolarizationState(t), a1 + a2).angle_deg))
    checks.append(Check("hwp composition", worst == 0.0, f"max deviation {worst}"))
    sym = all(malus_probability(PolarizationState(t), a) == malus_probability(PolarizationState(a), t)
              for t in range(-45, 135, 7) for a in range(-90, 270, 11))
    checks.append(Check("malus symmetry", sym, "cos² symmetric on a 7°×11° grid"))

    rng = root.substream("pbs")
    tx = sum(pbs_route(Photon(i, polarization=PolarizationState(45.0)), rng).value == "transmit" for i in range(n))
    checks.append(Check("pbs 45° split", _binomial_ok(tx, n, 0.5, 0.01), f"transmit fraction {tx / n:.4f}"))

    rng = root.substream("mz")
    bad = []
    for k, delta in enumerate(np.linspace(0.0, 2 * math.pi, 20, endpoint=False)):
        cfg = MachZehnderConfig(delta_override=float(delta))
        p = 0.5 * (1 + math.cos(delta))
        c = simulate_stream(cfg, n, rng)
        sigma = math.sqrt(p * (1 - p) / n)
        if abs(c.detector_B / n - p) > 5 * sigma + 1e-15:
            bad.append(k)
    checks.append(Check("interferometer law", not bad, f"20 phases within 5σ, failing {bad}"))
    c = simulate_stream(MachZehnderConfig(arm2_blocked=True), n, root.substream("mz-blocked"))
    fr = (c.detector_B / n, c.detector_C / n, c.absorbed / n)
    ok = all(abs(x - y) <= 0.01 for x, y in zip(fr, (0.25, 0.25, 0.5)))
    checks.append(Check("blocked arm", ok, f"(B, C, absorbed) = ({fr[0]:.4f}, {fr[1]:.4f}, {fr[2]:.4f})"))
    d = detection_probability(MachZehnderConfig(arm2_blocked=True))
    checks.append(Check("blocked arm analytic", (d.p_detector_B, d.p_detector_C, d.p_absorbed) == (0.25, 0.25, 0.5),
                        f"{d}"))

    rep = run_session(SessionConfig(n, compare_fraction=0.5), root.substream("qkd-clean"))
    ok = rep.qber == 0.0 and rep.final_key == rep.bob_final_key and abs(rep.sifted_length / n - 0.5) <= 0.005
    checks.append(Check("no-eve session", ok, f"qber {rep.qber}, sifted fraction {rep.sifted_length / n:.4f}"))

    rep = run_session(SessionConfig(2 * n, eve_enabled=True, compare_fraction=1.0), root.substream("qkd-eve"))
    checks.append(Check("eve qber", abs(rep.qber - 0.25) <= 0.01, f"qber {rep.qber:.4f} over {rep.compared_count} bits"))

    trials = 1000 if quick else 10_000
    for m in (1, 5, 10, 20):
        frac = _detection_rate(m, trials, root.substream(f"detect{m}"))
        expected = 1 - 0.75**m
        checks.append(Check(f"eve detection n={m}", abs(frac - expected) <= (0.05 if quick else 0.02),
                            f"{frac:.4f} vs 1-(3/4)^{m} = {expected:.4f}"))

    pairs = generate_pairs(PumpSource(pair_rate_hz=1e7), 1_000_000, root.substream("spdc"))
    worst = max((abs(1 / 405 - 1 / p.signal.wavelength_nm - 1 / p.idler.wavelength_nm) for p in pairs), default=0.0)
    checks.append(Check("spdc energy conservation", worst <= 1e-12 and
                        all((p.signal.wavelength_nm, p.idler.wavelength_nm) == (810.0, 810.0) for p in pairs),
                        f"{len(pairs)} pairs, worst residual {worst:.2e} nm⁻¹"))

    rng = root.substream("entangled")
    batch = generate_pairs(PumpSource(pair_rate_hz=1e9), n // 10 if quick else n // 2, rng)
    anti = 0
    for i, pair in enumerate(batch):
        angle = (i % 8) * 22.5
        p, _ = measure_entangled(pair, Which.SIGNAL, angle, rng)
        q, _ = measure_entangled(pair, Which.IDLER, angle, rng)
        anti += p is not q
    checks.append(Check("same-angle anticorrelation", bool(batch) and anti == len(batch),
                        f"{anti}/{len(batch)} opposite outcomes"))

    rng = root.substream("coinc")
    mismatched = 0
    for _ in range(20 if quick else 100):
        na, nb = int(rng.uniform() * 60), int(rng.uniform() * 60)
        ta = sorted(int(rng.uniform() * 500) for _ in range(na))
        tb = sorted(int(rng.uniform() * 500) for _ in range(nb))
        tau = int(rng.uniform() * 20)
        got = find_coincidences([DetectionEvent("A", t) for t in ta], [DetectionEvent("B", t) for t in tb],
                                CoincidenceWindow(tau))
        exp = _brute_force(ta, tb, tau)
        mismatched += [(a.timestamp_ns, b.timestamp_ns) for a, b in got] != [(ta[i], tb[j]) for i, j in exp]
    checks.append(Check("coincidences vs brute force", mismatched == 0, f"{mismatched} mismatching inputs"))

    world = World([_robot("r1")], dt_s=0.5)
    world.run({"r1": key_to_commands([1, 0, 1, 1], default_mapping(2.0))}, 4)
    trace = [r.command for r in world.trajectory]
    x = world.agents[0].pose[0]
    checks.append(Check("robot key 1,0,1,1", trace == ["Move", "Halt", "Move", "Move"] and math.isclose(x, 3 * 2.0 * 0.5),
                        f"trace {trace}, displacement {x}"))
    return checks


def _robot(agent_id: str):
    from .robotnet import Agent, Role

    return Agent(agent_id, Role.BOB)


def _detection_rate(m: int, trials: int, rng: RandomStream) -> float:
    """Fraction of trials in which comparing ``m`` sifted bits exposes a full intercept-resend Eve."""
    slots = int(2.4 * m * trials) + 200
    tx = transmit(slots, rng, eve_enabled=True)
    kept = np.flatnonzero(tx.alice_bases == tx.bob_bases)[: m * trials]
    alice, bob = tx.alice_bits[kept], tx.bob_bits[kept]
    channel = ClassicalChannel()
    sample = rng.substream("sample")
    from .qkd import SiftedKey

    hits = 0
    for t in range(trials):
        sl = slice(t * m, (t + 1) * m)
        idx = tuple(range(m))
        est = estimate_qber(SiftedKey(tuple(alice[sl].tolist()), idx), SiftedKey(tuple(bob[sl].tolist()), idx),
                            1.0, sample, channel, threshold=0.0)
        hits += est.eve_detected
    return hits / trials

"""Command-line entry point: ``qrobonet run|sweep|table1|selftest``."""
from __future__ import annotations

import argparse
import copy
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from ..errors import ParseError, ValidationError
from ..selftest import run_selftest, verify_table1
from .report import write_report, write_sweep_csv
from .runner import EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION, run_scenario
from .scenario import load_scenario, scenario_from_dict

log = logging.getLogger("qrobonet")


def _set_dotted(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ValidationError(dotted, f"'{k}' is not a mapping")
    node[keys[-1]] = value


def _sweep_values(args) -> list:
    if args.values is not None:
        return [yaml.safe_load(v) for v in args.values.split(",") if v.strip()]
    start, stop, num = args.linspace.split(",")
    return [float(x) for x in np.linspace(float(start), float(stop), int(num))]


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = scenario_from_dict({**scenario.to_dict(), "seed": args.seed})
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = run_scenario(scenario)
    path = write_report(report, args.out, fmt=args.format)
    print(f"{report.status}: {scenario.experiment.value} '{scenario.name}' seed={scenario.seed} -> {path}")
    return report.exit_code


def cmd_sweep(args) -> int:
    try:
        base = yaml.safe_load(Path(args.scenario).read_text(encoding="utf-8")) or {}
        values = _sweep_values(args)
        scenarios = []
        for v in values:
            data = copy.deepcopy(base)
            _set_dotted(data, args.param, v)
            scenarios.append((v, scenario_from_dict(data)))
    except (ParseError, ValidationError, yaml.YAMLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rows, worst = [], EXIT_OK
    for v, s in scenarios:
        report = run_scenario(s)
        print(f"{args.param}={v}: {report.status}")
        rows.append((v, {"status_code": report.exit_code, **report.summary}))
        if report.exit_code == EXIT_INTERNAL:
            worst = EXIT_INTERNAL
    path = write_sweep_csv(args.param, rows, Path(args.out) / "sweep.csv")
    print(f"wrote {path}")
    return worst


def cmd_table1(args) -> int:
    checks = verify_table1(args.trials, args.seed)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else 1


def cmd_selftest(args) -> int:
    checks = run_selftest(quick=args.quick, seed=args.seed)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrobonet", description="Quantum-optics robot networking simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("--scenario", required=True, help="YAML scenario")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="rerun a scenario over values of one parameter")
    p.add_argument("--scenario", required=True)
    p.add_argument("--param", required=True, help="dotted field name, e.g. interferometer.delta")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--values", help="comma-separated values")
    g.add_argument("--linspace", help="start,stop,num")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="verify the BB84 basis/outcome table")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--quick", action="store_true", help="smaller samples")
    p.add_argument("--seed", type=int, default=12345)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Scenario files, deterministic runs, reports and the ``qrobonet`` CLI."""
from .report import SimulationReport, write_report
from .runner import run_scenario
from .scenario import Scenario, load_scenario, scenario_from_dict

__all__ = ["Scenario", "SimulationReport", "load_scenario", "run_scenario", "scenario_from_dict", "write_report"]

"""Scenario engine: parsing, seeded generation, suite execution and report emission."""

from .emit import emit, load_reports, reports_csv, reports_json
from .generate import random_pconcave, random_polygon
from .runner import VerificationReport, audit, run_scenario, run_suite
from .scenario import Scenario, ScenarioError, dump_scenarios, parse_scenario, parse_scenarios
from .suites import default_suite, random_scenarios

__all__ = [
    "Scenario", "ScenarioError", "VerificationReport", "audit", "default_suite",
    "dump_scenarios", "emit", "load_reports", "parse_scenario", "parse_scenarios",
    "random_pconcave", "random_polygon", "random_scenarios", "reports_csv", "reports_json",
    "run_scenario", "run_suite",
]

"""Scenario harness: configs, registry, runner and CLI."""

from .config import ScenarioConfig, load_schema
from .results import Criterion, RunSummary
from .runner import make_config, run_scenario
from .scenarios import REGISTRY, list_scenarios

__all__ = ["ScenarioConfig", "load_schema", "Criterion", "RunSummary", "make_config",
           "run_scenario", "REGISTRY", "list_scenarios"]

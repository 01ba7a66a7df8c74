"""Scenario configuration, pipelines and command-line interface."""

from .config import ConfigError, ScenarioConfig, load_config, validate_config
from .runner import Comparison, RunReport, compare_to_reference, run_scenario
from .scenarios import SCENARIOS, ScenarioError

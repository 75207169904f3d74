"""Scenario configuration, experiment drivers and the command-line entry point."""
from .config import ConfigError, ScenarioConfig, load_config
from .tables import ResultTable

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "ResultTable"]

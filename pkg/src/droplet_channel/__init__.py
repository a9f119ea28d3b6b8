"""Airborne droplet transmission between a coughing and a receiving human."""

from .engine import (
    EnsembleStats,
    StaticCloud,
    SweepResult,
    TimeSeries,
    probability_curve,
    run_ensemble,
    run_simulation,
    sweep,
    to_csv,
)
from .params import ScenarioConfig, default_scenario, dump_config, load_config, load_config_file

__all__ = [
    "EnsembleStats", "StaticCloud", "SweepResult", "TimeSeries", "ScenarioConfig",
    "default_scenario", "dump_config", "load_config", "load_config_file",
    "probability_curve", "run_ensemble", "run_simulation", "sweep", "to_csv",
]

__version__ = "0.1.0"

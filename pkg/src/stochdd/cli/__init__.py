"""Command-line interface: configuration, scenarios and experiment runners."""
from .config import ExperimentConfig, load_config, parse_config
from .main import main
from .runners import run_bounds, run_limits, run_sweep_pulses, run_trajectories

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "main",
    "run_limits",
    "run_sweep_pulses",
    "run_trajectories",
    "run_bounds",
]

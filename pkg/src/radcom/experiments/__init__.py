"""Config-driven sweeps, CSV output and the ``radcom`` command line."""

from .config import ConfigError, ExperimentConfig, Sweep, config_from_dict, load_config
from .io import HEADER, emit_csv, read_csv
from .runner import TrialRecord, run_sweep, run_trial, summarize, trial_seed

__all__ = [
    "ConfigError", "ExperimentConfig", "HEADER", "Sweep", "TrialRecord", "config_from_dict",
    "emit_csv", "load_config", "read_csv", "run_sweep", "run_trial", "summarize", "trial_seed",
]

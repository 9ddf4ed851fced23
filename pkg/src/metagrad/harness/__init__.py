"""Experiment harness: configuration, seeded runs, aggregation and CLI."""

from .config import ConfigError, ExperimentConfig
from .experiments import ablate, compare, split_budget, sweep_lr
from .report import ExperimentReport, run_experiment, summary_json, to_csv
from .runner import RunRecord, replicate_rng, run_replicates, run_single

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentReport", "RunRecord", "ablate", "compare",
    "replicate_rng", "run_experiment", "run_replicates", "run_single", "split_budget", "summary_json",
    "sweep_lr", "to_csv",
]

"""Simulation and exact computation for random walks whose drift toward the
origin weakens with the number of visits to it."""
from .sequences import (DriftSequence, make_constant, make_power_law, make_power_log,
                        make_table, parse_sequence, scaling_bundle, scaling_for)
from .walk import simulate_excursions, simulate_path, summary_batch
from .lab import ExperimentConfig, ExperimentReport, run_experiment, EXPERIMENTS

__version__ = "0.1.0"

__all__ = [
    "DriftSequence", "make_constant", "make_power_law", "make_power_log", "make_table",
    "parse_sequence", "scaling_bundle", "scaling_for", "simulate_path", "simulate_excursions",
    "summary_batch", "ExperimentConfig", "ExperimentReport", "run_experiment", "EXPERIMENTS",
]

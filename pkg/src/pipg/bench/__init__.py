"""Benchmark harness: certified references, experiments, rate fits and the CLI."""

from .builtins import BUILTINS, builtin_problem, toy_problem
from .experiment import ExperimentConfig, ExperimentResult, SeriesResult, run_experiment
from .rates import fit_slope, rate_fit
from .reference import ReferenceBundle, compute_reference

__all__ = [
    "BUILTINS",
    "builtin_problem",
    "toy_problem",
    "ExperimentConfig",
    "ExperimentResult",
    "SeriesResult",
    "run_experiment",
    "fit_slope",
    "rate_fit",
    "ReferenceBundle",
    "compute_reference",
]

"""Empirical Bayes hyperparameter inference for fully-connected Boltzmann
machines, with annealed Gibbs data generation, brute-force verification
oracles, and a reproduction harness."""

from .estimator import (
    Branch,
    EstimateResult,
    PlefkaContext,
    advise_sample_size,
    estimate_H,
    estimate_gamma,
    run_algorithm1,
)
from .model import BoltzmannMachine, PriorFamily, PriorSpec, sample_parameters
from .moments import Dataset, SufficientStats, compute_stats
from .sampler import AnnealSchedule, SamplerConfig, generate_dataset, make_schedule

__all__ = [
    "AnnealSchedule",
    "BoltzmannMachine",
    "Branch",
    "Dataset",
    "EstimateResult",
    "PlefkaContext",
    "PriorFamily",
    "PriorSpec",
    "SamplerConfig",
    "SufficientStats",
    "advise_sample_size",
    "compute_stats",
    "estimate_H",
    "estimate_gamma",
    "generate_dataset",
    "make_schedule",
    "run_algorithm1",
    "sample_parameters",
]

__version__ = "0.1.0"

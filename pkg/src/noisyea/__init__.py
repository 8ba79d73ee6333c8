"""Noisy (1+lambda)-EAs on OneMax, Trap and Jump, with exact Markov-chain analysis."""

from .ea import AlgoConfig, EvalPolicy, RunRecord, SelectionRule, run, run_from
from .noise import NoiseKind, NoiseModel, make_rng, noisy_fitness
from .problems import BitString, Family, ProblemSpec, fitness, is_optimum

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig", "BitString", "EvalPolicy", "Family", "NoiseKind", "NoiseModel", "ProblemSpec",
    "RunRecord", "SelectionRule", "fitness", "is_optimum", "make_rng", "noisy_fitness", "run", "run_from",
]

"""Metaheuristic search strategies behind a common ask/tell interface."""

from .base import ALGORITHMS, DEFAULT_PARAMS, METAHEURISTICS, Optimizer, OptimizerConfig
from .evolution import BSA, JADE, CoBiDE, eigen_basis, lehmer_mean, pbest_pool
from .harmony import IHS, ihs_improvise
from .random_search import RandomSearch
from .runner import (
    REGISTRY,
    OptimizationResult,
    TraceRow,
    evaluation_budget,
    evaluation_seed,
    make_optimizer,
    run_optimizer,
)
from .swarm import AIWPSO, CuckooSearch, Firefly, levy_step, mantegna_sigma

__all__ = [
    "AIWPSO", "ALGORITHMS", "BSA", "CoBiDE", "CuckooSearch", "DEFAULT_PARAMS", "Firefly", "IHS",
    "JADE", "METAHEURISTICS", "OptimizationResult", "Optimizer", "OptimizerConfig", "REGISTRY",
    "RandomSearch", "TraceRow", "eigen_basis", "evaluation_budget", "evaluation_seed",
    "ihs_improvise", "lehmer_mean", "pbest_pool", "levy_step", "make_optimizer", "mantegna_sigma",
    "run_optimizer",
]

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import seeding
from ..space import Candidate, SearchSpace
from .base import OptimizerConfig
from .evolution import BSA, JADE, CoBiDE
from .harmony import IHS
from .random_search import RandomSearch
from .swarm import AIWPSO, CuckooSearch, Firefly

log = logging.getLogger(__name__)

REGISTRY = {
    cls.name: cls for cls in (IHS, AIWPSO, CuckooSearch, Firefly, BSA, JADE, CoBiDE, RandomSearch)
}


def make_optimizer(cfg: OptimizerConfig, space: SearchSpace, rng: np.random.Generator):
    cls = REGISTRY[cfg.algorithm]
    return cls(space, cfg.agents, cfg.iterations, rng, **cfg.params)


@dataclass
class TraceRow:
    iteration: int
    best_fitness: float
    mean_fitness: float
    n_evaluations: int
    elapsed_s: float


@dataclass
class OptimizationResult:
    best: Candidate
    trace: list
    n_evaluations: int
    warnings: list = field(default_factory=list)


def evaluation_seed(seed: int, iteration: int, index: int) -> int:
    return seeding.derive_seed(seed, seeding.EVALUATION, iteration, index)


def run_optimizer(cfg: OptimizerConfig, space: SearchSpace, fitness_fn, seed: int,
                  map_fn=map) -> OptimizationResult:
    """Minimise ``fitness_fn(candidate)`` over ``space``.

    Runs the initial population (iteration 0) plus ``cfg.iterations`` ask/tell
    rounds. Every candidate carries an ``eval_seed`` keyed by (seed, iteration,
    proposal index), so ``map_fn`` may evaluate candidates in any order or in
    parallel without changing the result. NaN fitness values are replaced by
    the worst finite value seen so far and reported in ``warnings``.
    """
    rng = np.random.default_rng(seed)
    opt = make_optimizer(cfg, space, rng)
    trace = []
    warnings = []
    worst_seen = -math.inf
    best_x, best_eval_seed = None, None
    start = time.perf_counter()
    for it in range(cfg.iterations + 1):
        cands = opt.ask()
        for k, cand in enumerate(cands):
            cand.eval_seed = evaluation_seed(seed, it, k)
        values = [float(v) for v in map_fn(fitness_fn, cands)]
        finite = [v for v in values if math.isfinite(v)]
        if finite:
            worst_seen = max(worst_seen, max(finite))
        for k, (cand, value) in enumerate(zip(cands, values)):
            if not math.isfinite(value):
                replacement = worst_seen if math.isfinite(worst_seen) else np.finfo(np.float64).max
                msg = f"iteration {it}, candidate {k}: fitness {value} quarantined as {replacement}"
                log.warning(msg)
                warnings.append(msg)
                value = replacement
            cand.fitness = value
        prev_best = opt.best_fitness
        opt.tell(cands)
        if opt.best_fitness < prev_best:
            k = int(np.argmin([c.fitness for c in cands]))
            best_x, best_eval_seed = cands[k].x.copy(), cands[k].eval_seed
        with np.errstate(over="ignore"):
            mean_fitness = float(np.mean([c.fitness for c in cands]))
        trace.append(TraceRow(it, opt.best_fitness, mean_fitness, opt.n_evaluations,
                              time.perf_counter() - start))
    warnings.extend(opt.warnings)
    best = Candidate(best_x, opt.best_fitness, best_eval_seed)
    return OptimizationResult(best, trace, opt.n_evaluations, warnings)


def evaluation_budget(cfg: OptimizerConfig) -> int:
    """Exact number of fitness evaluations ``run_optimizer`` performs."""
    n, t = cfg.agents, cfg.iterations
    if cfg.algorithm == "ihs":
        return n + t
    if cfg.algorithm == "cs":
        probe = CuckooSearch(SearchSpace([0.0], [1.0]), n, t, None, **cfg.params)
        total = n
        for it in range(1, t + 1):
            probe.iteration = it
            total += 1 + probe.n_abandon(probe.rates()[1])
        return total
    return n * (t + 1)

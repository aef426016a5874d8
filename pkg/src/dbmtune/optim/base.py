"""Common ask/tell machinery shared by every search strategy."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from ..space import Candidate, SearchSpace, clamp, sample_uniform

# default settings; keys are lower-case and double as config keys opt.<alg>.<param>
DEFAULT_PARAMS = {
    "ihs": {"hmcr": 0.7, "par_min": 0.1, "par_max": 0.7, "rho_min": 1.0, "rho_max": 10.0},
    "aiwpso": {"c1": 1.7, "c2": 1.7, "w": 0.7, "w_min": 0.5, "w_max": 1.5},
    "cs": {"tau": 0.1, "tau_min": 0.5, "tau_max": 1.0, "p": 0.25, "p_min": 0.05, "p_max": 0.5,
           "beta": 1.5, "schedule": "fixed"},
    "fa": {"gamma": 1.0, "beta": 1.0, "alpha": 0.2},
    "bsa": {"mix_rate": 1.0, "f": 3.0},
    "jade": {"c": 0.1, "g": 0.05},
    "cobide": {"pb": 0.4, "ps": 0.5},
    "rs": {},
}

ALGORITHMS = tuple(DEFAULT_PARAMS)
METAHEURISTICS = tuple(a for a in ALGORITHMS if a != "rs")

_PROBABILITIES = {"hmcr", "par_min", "par_max", "p", "p_min", "p_max", "mix_rate", "c", "g", "pb", "ps"}


@dataclass
class OptimizerConfig:
    algorithm: str
    agents: int = 5
    iterations: int = 50
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.algorithm = self.algorithm.lower()
        if self.algorithm not in DEFAULT_PARAMS:
            raise ContractError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        unknown = {k.lower() for k in self.params} - set(DEFAULT_PARAMS[self.algorithm])
        if unknown:
            raise ContractError(f"unknown {self.algorithm} parameters: {sorted(unknown)}")
        merged = dict(DEFAULT_PARAMS[self.algorithm])
        merged.update({k.lower(): v for k, v in self.params.items()})
        self.params = merged
        min_agents = 1 if self.algorithm in ("ihs", "rs") else 2
        if self.agents < min_agents:
            raise ContractError(f"{self.algorithm} needs at least {min_agents} agents")
        if self.iterations < 1:
            raise ContractError("iterations must be >= 1")
        for key, value in merged.items():
            if key in _PROBABILITIES and not 0.0 <= float(value) <= 1.0:
                raise ContractError(f"{self.algorithm}.{key} must lie in [0, 1], got {value}")


class Optimizer:
    """Population-based minimiser driven through ``ask``/``tell``.

    The first ``ask`` returns the uniformly sampled initial population
    (iteration 0); each later ``ask`` returns the proposals of one iteration.
    Proposals are always clamped to the space bounds.
    """

    name = "base"

    def __init__(self, space: SearchSpace, agents: int, iterations: int,
                 rng: np.random.Generator, **params):
        self.space = space
        self.agents = agents
        self.iterations = iterations
        self.rng = rng
        self.params = params
        self.iteration = 0
        self.best_x = None
        self.best_fitness = math.inf
        self.n_evaluations = 0
        self.warnings = []
        self._pending = None
        self.X = None
        self.fit = None

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def best(self) -> Candidate:
        return Candidate(None if self.best_x is None else self.best_x.copy(), self.best_fitness)

    def ask(self) -> list:
        if self._pending is not None:
            raise ContractError("ask() called twice without tell()")
        if self.iteration == 0:
            X = np.array([sample_uniform(self.space, self.rng).x for _ in range(self.agents)])
        else:
            X = self._propose()
        X = clamp(self.space, X)
        self._pending = X
        return [Candidate(row.copy()) for row in X]

    def tell(self, evaluated) -> None:
        if self._pending is None:
            raise ContractError("tell() called without a pending ask()")
        if len(evaluated) != len(self._pending):
            raise ContractError(f"expected {len(self._pending)} evaluated candidates, got {len(evaluated)}")
        values = []
        for cand, row in zip(evaluated, self._pending):
            if cand.fitness is None:
                raise ContractError("candidate told without a fitness value")
            if not np.array_equal(cand.x, row):
                raise ContractError("told candidates do not match the last ask()")
            values.append(float(cand.fitness))
        X, f = self._pending, np.array(values)
        self._pending = None
        self.n_evaluations += len(f)
        k = int(np.argmin(f))
        if f[k] < self.best_fitness:
            self.best_fitness = float(f[k])
            self.best_x = X[k].copy()
        if self.iteration == 0:
            self.X, self.fit = X.copy(), f.copy()
            self._initialize()
        else:
            self._accept(X, f)
        self.iteration += 1

    # hooks
    def _initialize(self):
        pass

    def _propose(self) -> np.ndarray:
        raise NotImplementedError

    def _accept(self, X, f):
        raise NotImplementedError

    # helpers
    def _progress(self) -> float:
        """Fraction of the move budget used before the current move, in [0, 1]."""
        if self.iterations <= 1:
            return 0.0
        return (self.iteration - 1) / (self.iterations - 1)

    def _greedy(self, X, f):
        better = f < self.fit
        self.X[better] = X[better]
        self.fit[better] = f[better]
        return better

    def _distinct(self, exclude, count, pool):
        """``count`` distinct indices from range(pool), none in ``exclude``."""
        choices = np.setdiff1d(np.arange(pool), np.asarray(exclude, dtype=int))
        return self.rng.choice(choices, size=count, replace=False)


def binomial_crossover(target, mutant, cr, rng):
    """Binomial crossover with one forced dimension per row."""
    n, d = target.shape
    cr = np.broadcast_to(np.asarray(cr, dtype=np.float64).reshape(-1, 1), (n, 1))
    mask = rng.random((n, d)) < cr
    forced = rng.integers(d, size=n)
    mask[np.arange(n), forced] = True
    return np.where(mask, mutant, target)


def cauchy(loc, scale, rng, size=None):
    return loc + scale * np.tan(np.pi * (rng.random(size) - 0.5))

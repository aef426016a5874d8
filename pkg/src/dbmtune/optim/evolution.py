import math

import numpy as np

from ..errors import ContractError
from .base import Optimizer, binomial_crossover, cauchy


class BSA(Optimizer):
    """Backtracking search: mutation towards a historical population."""

    name = "bsa"

    def _initialize(self):
        self.old = np.array([self.rng.uniform(self.space.lower, self.space.upper)
                             for _ in range(self.agents)])

    def crossover_map(self):
        n, d = self.agents, self.dim
        mask = np.zeros((n, d), dtype=bool)
        if self.rng.random() < self.rng.random():
            for i in range(n):
                k = max(1, math.ceil(self.params["mix_rate"] * self.rng.random() * d))
                mask[i, self.rng.permutation(d)[:k]] = True
        else:
            mask[np.arange(n), self.rng.integers(d, size=n)] = True
        return mask

    def _propose(self):
        if self.rng.random() < 0.5:
            self.old = self.X[self.rng.permutation(self.agents)].copy()
        scale = self.params["f"] * self.rng.standard_normal()
        mutant = self.X + scale * (self.old - self.X)
        return np.where(self.crossover_map(), mutant, self.X)

    def _accept(self, X, f):
        self._greedy(X, f)


def lehmer_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return float(np.sum(values ** 2) / np.sum(values))


def pbest_pool(fit, g) -> np.ndarray:
    """Indices of the ceil(g * N) best agents (at least one), best first."""
    top = max(1, math.ceil(g * len(fit) - 1e-12))
    return np.argsort(fit, kind="stable")[:top]


class JADE(Optimizer):
    """DE/current-to-pbest/1/bin with an external archive and adaptive F, CR."""

    name = "jade"

    def __init__(self, space, agents, iterations, rng, **params):
        if agents < 4:
            raise ContractError("JADE needs at least 4 agents")
        super().__init__(space, agents, iterations, rng, **params)
        self.mu_f = 0.5
        self.mu_cr = 0.5
        self.archive = np.empty((0, space.dim))

    def sample_f(self):
        f = np.empty(self.agents)
        for i in range(self.agents):
            value = cauchy(self.mu_f, 0.1, self.rng)
            while value <= 0.0:
                value = cauchy(self.mu_f, 0.1, self.rng)
            f[i] = min(value, 1.0)
        return f

    def _propose(self):
        n = self.agents
        cr = np.clip(self.rng.normal(self.mu_cr, 0.1, size=n), 0.0, 1.0)
        f = self.sample_f()
        ranked = pbest_pool(self.fit, self.params["g"])
        top = len(ranked)
        union = np.vstack([self.X, self.archive])
        mutant = np.empty_like(self.X)
        for i in range(n):
            pbest = ranked[self.rng.integers(top)]
            r1 = self._distinct([i], 1, n)[0]
            r2 = self._distinct([i, r1], 1, len(union))[0]
            mutant[i] = (self.X[i] + f[i] * (self.X[pbest] - self.X[i])
                         + f[i] * (self.X[r1] - union[r2]))
        self._f, self._cr = f, cr
        return binomial_crossover(self.X, mutant, cr, self.rng)

    def _accept(self, X, f):
        losers = self.X[f < self.fit].copy()
        success = self._greedy(X, f)
        if success.any():
            c = self.params["c"]
            self.mu_f = (1 - c) * self.mu_f + c * lehmer_mean(self._f[success])
            self.mu_cr = (1 - c) * self.mu_cr + c * float(np.mean(self._cr[success]))
        self.archive = np.vstack([self.archive, losers])
        excess = len(self.archive) - self.agents
        if excess > 0:
            keep = np.sort(self.rng.choice(len(self.archive), size=self.agents, replace=False))
            self.archive = self.archive[keep]


def bimodal_f(rng) -> float:
    loc = 0.65 if rng.random() < 0.5 else 1.0
    return _truncated_cauchy(loc, rng)


def bimodal_cr(rng) -> float:
    loc = 0.1 if rng.random() < 0.5 else 0.95
    return _truncated_cauchy(loc, rng)


def _truncated_cauchy(loc, rng):
    value = cauchy(loc, 0.1, rng)
    while value <= 0.0:
        value = cauchy(loc, 0.1, rng)
    return min(value, 1.0)


def eigen_basis(points):
    """Eigenvectors (columns) of the covariance of ``points``; None if degenerate."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 2 or not np.isfinite(points).all():
        return None
    cov = np.atleast_2d(np.cov(points, rowvar=False))
    if not np.isfinite(cov).all():
        return None
    try:
        _, vectors = np.linalg.eigh(cov)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(vectors).all():
        return None
    return vectors


class CoBiDE(Optimizer):
    """DE/rand/1 with bimodal F/CR and, with probability pb, crossover in the
    eigenbasis of the covariance of the best ps-fraction of the population."""

    name = "cobide"

    def __init__(self, space, agents, iterations, rng, **params):
        if agents < 4:
            raise ContractError("CoBiDE needs at least 4 agents")
        super().__init__(space, agents, iterations, rng, **params)
        self.eigen_fallbacks = 0

    def _initialize(self):
        self.F = np.array([bimodal_f(self.rng) for _ in range(self.agents)])
        self.CR = np.array([bimodal_cr(self.rng) for _ in range(self.agents)])

    def _propose(self):
        n = self.agents
        mutant = np.empty_like(self.X)
        for i in range(n):
            r1, r2, r3 = self._distinct([i], 3, n)
            mutant[i] = self.X[r1] + self.F[i] * (self.X[r2] - self.X[r3])
        basis = None
        pb = self.params["pb"]
        if pb > 0 and self.rng.random() < pb:
            top = max(2, math.ceil(self.params["ps"] * n - 1e-12))
            basis = eigen_basis(self.X[np.argsort(self.fit, kind="stable")[:top]])
            if basis is None:
                self.eigen_fallbacks += 1
                self.warnings.append(f"iteration {self.iteration}: eigen crossover fell back to binomial")
        if basis is None:
            return binomial_crossover(self.X, mutant, self.CR, self.rng)
        trial = binomial_crossover(self.X @ basis, mutant @ basis, self.CR, self.rng)
        return trial @ basis.T

    def _accept(self, X, f):
        success = self._greedy(X, f)
        for i in np.flatnonzero(~success):
            self.F[i] = bimodal_f(self.rng)
            self.CR[i] = bimodal_cr(self.rng)

import math

import numpy as np
from scipy.special import gamma as gamma_fn

from .base import Optimizer


class AIWPSO(Optimizer):
    """PSO whose inertia weight follows the fraction of particles that
    improved their personal best in the last iteration."""

    name = "aiwpso"

    def _initialize(self):
        self.V = np.zeros_like(self.X)
        self.pbest = self.X.copy()
        self.pbest_fit = self.fit.copy()
        self.w = float(self.params["w"])

    def gbest(self):
        return self.pbest[int(np.argmin(self.pbest_fit))]

    def _propose(self):
        p = self.params
        r1 = self.rng.random(self.X.shape)
        r2 = self.rng.random(self.X.shape)
        self.V = (self.w * self.V
                  + p["c1"] * r1 * (self.pbest - self.X)
                  + p["c2"] * r2 * (self.gbest() - self.X))
        return self.X + self.V

    def _accept(self, X, f):
        self.X, self.fit = X.copy(), f.copy()
        success = f < self.pbest_fit
        self.pbest[success] = X[success]
        self.pbest_fit[success] = f[success]
        p = self.params
        self.w = p["w_min"] + (p["w_max"] - p["w_min"]) * success.sum() / self.agents


def mantegna_sigma(beta: float) -> float:
    num = gamma_fn(1 + beta) * math.sin(math.pi * beta / 2)
    den = gamma_fn((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2)
    return (num / den) ** (1 / beta)


def levy_step(beta, size, rng):
    """Heavy-tailed steps by Mantegna's algorithm."""
    u = rng.normal(0.0, mantegna_sigma(beta), size=size)
    v = rng.normal(0.0, 1.0, size=size)
    return u / np.abs(v) ** (1 / beta)


class CuckooSearch(Optimizer):
    """Cuckoo search with a reduced evaluation budget per iteration.

    Every iteration the ceil(p * agents) worst nests (never the best one) are
    abandoned and rebuilt uniformly, and one cuckoo leaves a randomly chosen
    nest by a Levy flight of scale tau * range and competes with another
    random nest. That costs 1 + ceil(p * agents) evaluations.
    """

    name = "cs"

    def rates(self):
        p = self.params
        if p["schedule"] == "linear":
            t = self._progress()
            tau = p["tau_max"] + (p["tau_min"] - p["tau_max"]) * t
            pa = p["p_max"] + (p["p_min"] - p["p_max"]) * t
            return tau, pa
        return p["tau"], p["p"]

    def n_abandon(self, pa) -> int:
        return min(math.ceil(pa * self.agents - 1e-12), self.agents - 1)

    def _propose(self):
        tau, pa = self.rates()
        span = self.space.upper - self.space.lower
        src = int(self.rng.integers(self.agents))
        egg = self.X[src] + tau * levy_step(self.params["beta"], self.dim, self.rng) * span
        self._target = int(self.rng.integers(self.agents))
        order = np.argsort(self.fit, kind="stable")
        self._abandoned = order[::-1][:self.n_abandon(pa)]
        rebuilt = [self.rng.uniform(self.space.lower, self.space.upper) for _ in self._abandoned]
        return np.vstack([egg[None, :], *rebuilt]) if rebuilt else egg[None, :]

    def _accept(self, X, f):
        for row, idx in enumerate(self._abandoned, start=1):
            self.X[idx] = X[row]
            self.fit[idx] = f[row]
        if f[0] < self.fit[self._target]:
            self.X[self._target] = X[0]
            self.fit[self._target] = f[0]


class Firefly(Optimizer):
    """Firefly algorithm; distances are measured on range-normalised coordinates
    so gamma is independent of the units of each dimension."""

    name = "fa"

    def _propose(self):
        p = self.params
        gamma, beta0, alpha = p["gamma"], p["beta"], p["alpha"]
        span = self.space.upper - self.space.lower
        X = self.X.copy()
        fit = self.fit
        for i in range(self.agents):
            brighter = [j for j in range(self.agents) if fit[j] < fit[i]]
            if not brighter:
                X[i] = X[i] + alpha * (self.rng.random(self.dim) - 0.5)
                continue
            for j in brighter:
                r2 = float(np.sum(((X[j] - X[i]) / span) ** 2))
                attract = beta0 if r2 == 0.0 else beta0 * math.exp(-gamma * r2)
                X[i] = X[i] + attract * (X[j] - X[i]) + alpha * (self.rng.random(self.dim) - 0.5)
        return X

    def _accept(self, X, f):
        self.X, self.fit = X.copy(), f.copy()

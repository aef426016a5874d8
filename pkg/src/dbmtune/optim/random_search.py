import numpy as np

from ..space import sample_uniform
from .base import Optimizer


class RandomSearch(Optimizer):
    name = "rs"

    def _propose(self):
        return np.array([sample_uniform(self.space, self.rng).x for _ in range(self.agents)])

    def _accept(self, X, f):
        self.X, self.fit = X.copy(), f.copy()

import numpy as np

from .base import Optimizer


def ihs_improvise(memory, lower, upper, hmcr, par, bandwidth, rng):
    """Improvise one harmony.

    Each dimension is taken, with probability ``hmcr``, from a uniformly chosen
    memory row and then, with probability ``par``, shifted by a uniform amount
    in [-bandwidth_d, bandwidth_d]; otherwise it is drawn uniformly in bounds.
    """
    memory = np.asarray(memory, dtype=np.float64)
    k, d = memory.shape
    consider = rng.random(d) < hmcr
    rows = rng.integers(k, size=d)
    adjust = (rng.random(d) < par) & consider
    shift = np.asarray(bandwidth) * rng.uniform(-1.0, 1.0, size=d)
    fresh = rng.uniform(lower, upper)
    x = np.where(consider, memory[rows, np.arange(d)], fresh)
    return np.where(adjust, x + shift, x)


class IHS(Optimizer):
    """Improved harmony search: one improvisation per iteration.

    PAR grows linearly from par_min to par_max and the bandwidth decays
    exponentially from rho_max to rho_min over the run. Bandwidths are
    expressed in percent of each dimension's range.
    """

    name = "ihs"

    def par(self) -> float:
        p = self.params
        return p["par_min"] + (p["par_max"] - p["par_min"]) * self._progress()

    def bandwidth(self) -> float:
        p = self.params
        return p["rho_max"] * np.exp(np.log(p["rho_min"] / p["rho_max"]) * self._progress())

    def _propose(self):
        span = self.space.upper - self.space.lower
        bw = self.bandwidth() / 100.0 * span
        x = ihs_improvise(self.X, self.space.lower, self.space.upper,
                          self.params["hmcr"], self.par(), bw, self.rng)
        return x[None, :]

    def _accept(self, X, f):
        worst = int(np.argmax(self.fit))
        if f[0] < self.fit[worst]:
            self.X[worst] = X[0]
            self.fit[worst] = f[0]

"""Hyperparameter search space: bounds, clamping, uniform sampling, decoding."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractError

# per-layer dimension order: hidden units, learning rate, momentum, weight decay
DEFAULT_BOUNDS = {
    "n": (5.0, 100.0),
    "eta": (0.1, 0.9),
    "phi": (0.00001, 0.01),
    "lambda": (0.1, 0.9),
}
PER_LAYER = ("n", "eta", "phi", "lambda")


class LayerHyper(NamedTuple):
    n_hidden: int
    eta: float
    momentum: float
    weight_decay: float


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64).copy()
        upper = np.asarray(self.upper, dtype=np.float64).copy()
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise ContractError("bounds must be equal-length non-empty vectors")
        if not np.all(lower < upper):
            raise ContractError("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def for_layers(cls, n_layers: int, bounds: Optional[dict] = None) -> "SearchSpace":
        """Space of ``4 * n_layers`` variables; ``bounds`` overrides entries of DEFAULT_BOUNDS."""
        if n_layers < 1:
            raise ContractError("need at least one layer")
        merged = dict(DEFAULT_BOUNDS)
        merged.update(bounds or {})
        lo = [merged[key][0] for key in PER_LAYER] * n_layers
        hi = [merged[key][1] for key in PER_LAYER] * n_layers
        return cls(np.array(lo), np.array(hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def n_layers(self) -> int:
        return self.dim // 4

    def __eq__(self, other):
        return (
            isinstance(other, SearchSpace)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


@dataclass
class Candidate:
    x: np.ndarray
    fitness: Optional[float] = None
    eval_seed: int = 0
    meta: dict = field(default_factory=dict, repr=False)


def clamp(space: SearchSpace, x) -> np.ndarray:
    return np.minimum(np.maximum(np.asarray(x, dtype=np.float64), space.lower), space.upper)


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Candidate:
    return Candidate(rng.uniform(space.lower, space.upper))


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def decode(space: SearchSpace, x) -> list:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (space.dim,) or space.dim % 4:
        raise ContractError(f"candidate of length {x.size} does not fit a {space.dim}-dim layer space")
    xc = clamp(space, x)
    out = []
    for j in range(space.n_layers):
        base = 4 * j
        n_lo = math.ceil(space.lower[base])
        n_hi = math.floor(space.upper[base])
        n_hidden = min(max(round_half_away(x[base]), n_lo), n_hi)
        out.append(LayerHyper(n_hidden, float(xc[base + 1]), float(xc[base + 2]), float(xc[base + 3])))
    return out

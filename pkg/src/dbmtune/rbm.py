"""Bernoulli-Bernoulli restricted Boltzmann machine with CD/PCD training."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ContractError

CD = "cd"
PCD = "pcd"


def sigmoid(x):
    """Logistic function; saturates to 0/1 for large |x| without overflow warnings."""
    return expit(x)


@dataclass
class RbmLayer:
    W: np.ndarray
    a: np.ndarray
    b: np.ndarray
    dW_prev: np.ndarray = None
    da_prev: np.ndarray = None
    db_prev: np.ndarray = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] < 1 or self.W.shape[1] < 1:
            raise ContractError(f"weight matrix must be m x n with m, n >= 1, got {self.W.shape}")
        if self.a.shape != (self.m,) or self.b.shape != (self.n,):
            raise ContractError(
                f"bias shapes {self.a.shape}, {self.b.shape} do not match W {self.W.shape}"
            )
        if self.dW_prev is None:
            self.dW_prev = np.zeros_like(self.W)
        if self.da_prev is None:
            self.da_prev = np.zeros_like(self.a)
        if self.db_prev is None:
            self.db_prev = np.zeros_like(self.b)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "RbmLayer":
        return RbmLayer(
            self.W.copy(), self.a.copy(), self.b.copy(),
            self.dW_prev.copy(), self.da_prev.copy(), self.db_prev.copy(),
        )

    def same_parameters(self, other: "RbmLayer") -> bool:
        return (
            np.array_equal(self.W, other.W)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )


@dataclass
class TrainConfig:
    eta: float = 0.1
    weight_decay: float = 0.0
    momentum: float = 0.0
    epochs: int = 10
    batch_size: int = 20
    learner: str = CD
    gibbs_steps: int = 1

    def __post_init__(self):
        self.learner = self.learner.lower()
        if self.learner not in (CD, PCD):
            raise ContractError(f"learner must be 'cd' or 'pcd', got {self.learner!r}")
        if not self.eta >= 0:
            raise ContractError("eta must be >= 0")
        if not self.weight_decay >= 0:
            raise ContractError("weight_decay must be >= 0")
        if not self.momentum >= 0:
            raise ContractError("momentum must be >= 0")
        if self.epochs < 0 or self.batch_size < 1 or self.gibbs_steps < 1:
            raise ContractError("epochs must be >= 0, batch_size and gibbs_steps >= 1")


@dataclass
class PcdChains:
    fantasy_v: np.ndarray = field(repr=False)


def init_layer(m: int, n: int, rng: np.random.Generator, init_sigma: float = 0.01) -> RbmLayer:
    if m < 1 or n < 1:
        raise ContractError(f"layer sizes must be >= 1, got {m} x {n}")
    W = rng.normal(0.0, init_sigma, size=(m, n))
    return RbmLayer(W, np.zeros(m), np.zeros(n))


def _check_width(x, width, what):
    if x.shape[-1] != width:
        raise ContractError(f"{what} has length {x.shape[-1]}, expected {width}")


def energy(layer: RbmLayer, v, h) -> float:
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if v.shape != (layer.m,) or h.shape != (layer.n,):
        raise ContractError(f"energy expects v of length {layer.m} and h of length {layer.n}")
    return float(-(layer.a @ v) - (layer.b @ h) - v @ layer.W @ h)


def prob_h_given_v(layer: RbmLayer, v):
    """P(h_j = 1 | v) for a vector or a batch (rows) of visible means."""
    v = np.asarray(v, dtype=np.float64)
    _check_width(v, layer.m, "visible input")
    return sigmoid(v @ layer.W + layer.b)


def prob_v_given_h(layer: RbmLayer, h):
    h = np.asarray(h, dtype=np.float64)
    _check_width(h, layer.n, "hidden input")
    return sigmoid(h @ layer.W.T + layer.a)


def sample_bernoulli(p, rng: np.random.Generator):
    # one uniform draw per entry, C order
    p = np.asarray(p, dtype=np.float64)
    return (rng.random(p.shape) < p).astype(np.float64)


def free_energy(layer: RbmLayer, v):
    """F(v) = -a.v - sum_j log(1 + exp(b_j + (W^T v)_j)), vectorised over rows."""
    v = np.asarray(v, dtype=np.float64)
    _check_width(v, layer.m, "visible input")
    return -(v @ layer.a) - np.logaddexp(0.0, v @ layer.W + layer.b).sum(axis=-1)


def reconstruct_mean(layer: RbmLayer, v):
    return prob_v_given_h(layer, prob_h_given_v(layer, v))


def init_chains(batch, rng: np.random.Generator) -> PcdChains:
    batch = np.asarray(batch, dtype=np.float64)
    if np.all((batch == 0) | (batch == 1)):
        return PcdChains(batch.copy())
    # real-valued inputs (upper layers) are binarised so the chains stay in {0,1}
    return PcdChains(sample_bernoulli(batch, rng))


def cd_step(layer: RbmLayer, batch, cfg: TrainConfig, rng: np.random.Generator,
            chains: PcdChains = None) -> float:
    """One CD-k / PCD-k parameter update on a mini-batch, in place.

    Hidden states driving the chain are sampled; the statistics entering the
    updates use visible and hidden probabilities. Returns the batch mean
    squared reconstruction error measured before the update.
    """
    v0 = np.asarray(batch, dtype=np.float64)
    if v0.ndim != 2:
        raise ContractError("batch must be a 2-d array")
    _check_width(v0, layer.m, "batch row")
    if cfg.learner == PCD and chains is None:
        raise ContractError("PCD learner requires persistent chains")

    ph0 = prob_h_given_v(layer, v0)
    error = float(np.mean((v0 - prob_v_given_h(layer, ph0)) ** 2))

    if cfg.learner == PCD:
        ph_chain = prob_h_given_v(layer, chains.fantasy_v)
    else:
        ph_chain = ph0
    for step in range(cfg.gibbs_steps):
        h = sample_bernoulli(ph_chain, rng)
        neg_v = prob_v_given_h(layer, h)
        last = step == cfg.gibbs_steps - 1
        if not last or cfg.learner == PCD:
            v_sample = sample_bernoulli(neg_v, rng)
        if not last:
            ph_chain = prob_h_given_v(layer, v_sample)
    neg_h = prob_h_given_v(layer, neg_v)
    if cfg.learner == PCD:
        chains.fantasy_v = v_sample

    n_pos = v0.shape[0]
    n_neg = neg_v.shape[0]
    pos_W = v0.T @ ph0 / n_pos
    neg_W = neg_v.T @ neg_h / n_neg
    dW = cfg.eta * (pos_W - neg_W) - cfg.weight_decay * layer.W + cfg.momentum * layer.dW_prev
    da = cfg.eta * (v0.mean(axis=0) - neg_v.mean(axis=0)) + cfg.momentum * layer.da_prev
    db = cfg.eta * (ph0.mean(axis=0) - neg_h.mean(axis=0)) + cfg.momentum * layer.db_prev

    layer.W = layer.W + dW
    layer.a = layer.a + da
    layer.b = layer.b + db
    layer.dW_prev, layer.da_prev, layer.db_prev = dW, da, db
    if not (np.isfinite(layer.W).all() and np.isfinite(layer.a).all() and np.isfinite(layer.b).all()):
        raise FloatingPointError("non-finite RBM parameters after update")
    return error


def train_rbm(layer: RbmLayer, data, cfg: TrainConfig, rng: np.random.Generator,
              monitor=None) -> list:
    """Train ``layer`` in place for ``cfg.epochs`` epochs of shuffled mini-batches.

    ``monitor(epoch, layer, mean_error)`` is called after every epoch, if given.
    Returns the per-epoch mean reconstruction errors.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ContractError("training data must be a non-empty 2-d array")
    _check_width(data, layer.m, "training row")
    n_rows = data.shape[0]
    chains = None
    errors = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_rows)
        total = 0.0
        for start in range(0, n_rows, cfg.batch_size):
            batch = data[order[start:start + cfg.batch_size]]
            if cfg.learner == PCD and chains is None:
                chains = init_chains(batch, rng)
            total += cd_step(layer, batch, cfg, rng, chains) * batch.shape[0]
        errors.append(total / n_rows)
        if monitor is not None:
            monitor(epoch, layer, errors[-1])
    return errors

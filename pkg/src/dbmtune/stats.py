"""Likelihood diagnostics, exact small-model oracles, Wilcoxon signed-rank test."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm, rankdata

from .errors import ContractError, NoEffectiveSamples
from .rbm import RbmLayer, free_energy

MAX_ENUMERATION_UNITS = 20
EXACT_LIMIT = 25


def log_pseudo_likelihood(layer: RbmLayer, data, rng: np.random.Generator) -> float:
    """Stochastic one-bit-flip estimate of the log pseudo-likelihood, averaged over rows."""
    v = np.asarray(data, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    m = layer.m
    flip = rng.integers(m, size=v.shape[0])
    v_flipped = v.copy()
    rows = np.arange(v.shape[0])
    v_flipped[rows, flip] = 1.0 - v_flipped[rows, flip]
    gap = free_energy(layer, v_flipped) - free_energy(layer, v)
    # log sigmoid(gap) = -log(1 + exp(-gap))
    return float(np.mean(-m * np.logaddexp(0.0, -gap)))


def all_states(k: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=k)))


def _check_enumerable(layer):
    if layer.m + layer.n > MAX_ENUMERATION_UNITS:
        raise ContractError(f"model with {layer.m + layer.n} units is too large to enumerate")


def log_partition(layer: RbmLayer) -> float:
    _check_enumerable(layer)
    return float(logsumexp(-free_energy(layer, all_states(layer.m))))


def exact_log_likelihood(layer: RbmLayer, data) -> float:
    """Mean log P(v) over the rows of ``data``, with Z from full enumeration."""
    v = np.atleast_2d(np.asarray(data, dtype=np.float64))
    return float(np.mean(-free_energy(layer, v)) - log_partition(layer))


def exact_log_likelihood_grad(layer: RbmLayer, data):
    """Gradient of the mean exact log-likelihood: data minus model statistics.

    Returns (dW, da, db).
    """
    _check_enumerable(layer)
    v = np.atleast_2d(np.asarray(data, dtype=np.float64))
    ph = 1.0 / (1.0 + np.exp(-(v @ layer.W + layer.b)))
    states = all_states(layer.m)
    logp = -free_energy(layer, states)
    p = np.exp(logp - logsumexp(logp))
    ph_model = 1.0 / (1.0 + np.exp(-(states @ layer.W + layer.b)))
    dW = v.T @ ph / v.shape[0] - (states * p[:, None]).T @ ph_model
    da = v.mean(axis=0) - p @ states
    db = ph.mean(axis=0) - p @ ph_model
    return dW, da, db


@dataclass
class WilcoxonResult:
    W_statistic: float
    n_effective: int
    p_value: float
    method: str
    significant_at_0_05: bool

    def as_dict(self) -> dict:
        return {
            "W_statistic": self.W_statistic,
            "n_effective": self.n_effective,
            "p_value": self.p_value,
            "method": self.method,
            "significant_at_0_05": self.significant_at_0_05,
        }


def _signed_ranks(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError("wilcoxon_signed_rank needs two vectors of equal length")
    if x.size < 5:
        raise ContractError("wilcoxon_signed_rank needs at least 5 pairs")
    d = x - y
    d = d[d != 0]
    if d.size == 0:
        raise NoEffectiveSamples("all paired differences are zero")
    ranks = rankdata(np.abs(d))
    return d, ranks


def exact_null_count(doubled_ranks, w_doubled: int) -> int:
    """Number of the 2**n sign assignments whose min(W+, W-) is <= w.

    Works on doubled ranks so tied (half-integer) ranks stay integral; counts
    are obtained by dynamic programming over the subset sums of W+.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    hits = 0
    for s in range(total + 1):
        if min(s, total - s) <= w_doubled:
            hits += counts[s]
    return int(hits)


def wilcoxon_signed_rank(x, y, method: str = "auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test.

    Zero differences are dropped and tied magnitudes share average ranks.
    ``method`` is "auto" (exact for up to 25 non-zero pairs, normal
    approximation above), "exact" or "normal".
    """
    d, ranks = _signed_ranks(x, y)
    n = d.size
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if method == "auto":
        method = "exact" if n <= EXACT_LIMIT else "normal"
    if method == "exact":
        doubled = [int(round(2 * r)) for r in ranks]
        hits = exact_null_count(doubled, int(round(2 * w)))
        p = hits / 2 ** n
        label = "Exact"
    elif method == "normal":
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
        if var <= 0:
            p = 1.0
        else:
            z = (w - mean + 0.5) / math.sqrt(var)
            p = float(min(1.0, 2.0 * norm.cdf(z)))
        label = "NormalApprox"
    else:
        raise ContractError(f"unknown method {method!r}")
    p = min(1.0, p)
    return WilcoxonResult(w, n, p, label, p < 0.05)


def summarize(values):
    """Arithmetic mean and sample (n-1) standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ContractError("summarize needs at least two values")
    return float(values.mean()), float(values.std(ddof=1))

"""Stacked RBMs: greedy training, DBN/DBM reconstruction and model files."""

import functools
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .rbm import (
    RbmLayer,
    init_layer,
    prob_h_given_v,
    prob_v_given_h,
    sigmoid,
    train_rbm,
)

DBN = "dbn"
DBM = "dbm"
DEFAULT_SWEEPS = 3

MAGIC = b"EBMM"
FORMAT_VERSION = 1
_KIND_CODES = {DBN: 0, DBM: 1}


@dataclass
class StackedModel:
    kind: str
    layers: list

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in (DBN, DBM):
            raise ContractError(f"model kind must be 'dbn' or 'dbm', got {self.kind!r}")
        if not self.layers:
            raise ContractError("a stacked model needs at least one layer")
        for below, above in zip(self.layers, self.layers[1:]):
            if below.n != above.m:
                raise ContractError(
                    f"adjacent layers incompatible: {below.m}x{below.n} then {above.m}x{above.n}"
                )

    @property
    def n_visible(self) -> int:
        return self.layers[0].m

    def copy(self) -> "StackedModel":
        return StackedModel(self.kind, [layer.copy() for layer in self.layers])


def build_model(kind: str, n_visible: int, hidden_sizes, rng: np.random.Generator,
                init_sigma: float = 0.01) -> StackedModel:
    sizes = [n_visible, *hidden_sizes]
    layers = [init_layer(m, n, rng, init_sigma) for m, n in zip(sizes, sizes[1:])]
    return StackedModel(kind, layers)


def train_greedy(model: StackedModel, data, per_layer_cfg, rng: np.random.Generator,
                 monitor=None) -> list:
    """Greedy layer-wise training, in place.

    Layer 0 sees the data; every layer above sees the mean hidden activations
    of the trained layer below. ``monitor(layer_index, epoch, layer, error)``
    is forwarded to each layer's training loop. Returns per-layer lists of
    per-epoch reconstruction errors.
    """
    per_layer_cfg = list(per_layer_cfg)
    if len(per_layer_cfg) != len(model.layers):
        raise ContractError(
            f"{len(per_layer_cfg)} training configs for {len(model.layers)} layers"
        )
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_visible:
        raise ContractError(
            f"data of shape {x.shape} does not match {model.n_visible} visible units"
        )
    traces = []
    for index, (layer, cfg) in enumerate(zip(model.layers, per_layer_cfg)):
        layer_monitor = None
        if monitor is not None:
            layer_monitor = functools.partial(monitor, index)
        traces.append(train_rbm(layer, x, cfg, rng, monitor=layer_monitor))
        if index + 1 < len(model.layers):
            x = prob_h_given_v(layer, x)
    return traces


def dbn_reconstruct(model: StackedModel, v):
    """Deterministic mean pass up through every layer and back down."""
    if model.kind != DBN:
        raise ContractError("dbn_reconstruct requires a DBN model")
    return _up_down(model, v)


def _up_down(model, v):
    x = np.asarray(v, dtype=np.float64)
    for layer in model.layers:
        x = prob_h_given_v(layer, x)
    for layer in reversed(model.layers):
        x = prob_v_given_h(layer, x)
    return x


def dbm_hidden_means(model: StackedModel, v, sweeps: int = DEFAULT_SWEEPS) -> list:
    """Hidden-layer means after a bottom-up pass and ``sweeps`` feedback sweeps.

    Each sweep visits layers bottom to top: an interior layer combines the
    bottom-up input from the layer below with the top-down input from the
    layer above; the top layer only receives bottom-up input.
    """
    v = np.asarray(v, dtype=np.float64)
    layers = model.layers
    means = []
    x = v
    for layer in layers:
        x = prob_h_given_v(layer, x)
        means.append(x)
    for _ in range(sweeps):
        for i, layer in enumerate(layers):
            below = v if i == 0 else means[i - 1]
            total = below @ layer.W + layer.b
            if i + 1 < len(layers):
                total = total + means[i + 1] @ layers[i + 1].W.T
            means[i] = sigmoid(total)
    return means


def dbm_reconstruct(model: StackedModel, v, sweeps: int = DEFAULT_SWEEPS):
    if model.kind != DBM:
        raise ContractError("dbm_reconstruct requires a DBM model")
    if sweeps < 0:
        raise ContractError("sweeps must be >= 0")
    if len(model.layers) == 1 or sweeps == 0:
        return _up_down(model, v)
    h1 = dbm_hidden_means(model, v, sweeps)[0]
    return prob_v_given_h(model.layers[0], h1)


def reconstruct(model: StackedModel, v, sweeps: int = DEFAULT_SWEEPS):
    if model.kind == DBM:
        return dbm_reconstruct(model, v, sweeps)
    return dbn_reconstruct(model, v)


def reconstruction_mse(model: StackedModel, data, sweeps: int = DEFAULT_SWEEPS) -> float:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ContractError("reconstruction_mse needs a non-empty data matrix")
    return float(np.mean((data - reconstruct(model, data, sweeps)) ** 2))


def save_model(model: StackedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def dumps_model(model: StackedModel) -> bytes:
    parts = [struct.pack("<4sIBB6x", MAGIC, FORMAT_VERSION, _KIND_CODES[model.kind], len(model.layers))]
    for layer in model.layers:
        parts.append(struct.pack("<II", layer.m, layer.n))
        for arr in (layer.W, layer.a, layer.b):
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def load_model(path) -> StackedModel:
    with open(path, "rb") as fh:
        return loads_model(fh.read())


def loads_model(blob: bytes) -> StackedModel:
    if len(blob) < 16:
        raise ContractError("model file shorter than its 16-byte header")
    magic, version, kind_code, n_layers = struct.unpack_from("<4sIBB", blob, 0)
    if magic != MAGIC:
        raise ContractError(f"bad model magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ContractError(f"unsupported model file version {version}")
    kinds = {code: name for name, code in _KIND_CODES.items()}
    if kind_code not in kinds:
        raise ContractError(f"unknown model kind code {kind_code}")
    offset = 16
    layers = []
    for _ in range(n_layers):
        if offset + 8 > len(blob):
            raise ContractError(f"truncated model file at byte {offset}")
        m, n = struct.unpack_from("<II", blob, offset)
        offset += 8
        count = m * n + m + n
        if offset + 8 * count > len(blob):
            raise ContractError(f"truncated model file at byte {offset}")
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(np.float64)
        offset += 8 * count
        layers.append(RbmLayer(values[:m * n].reshape(m, n), values[m * n:m * n + m], values[m * n + m:]))
    if offset != len(blob):
        raise ContractError(f"{len(blob) - offset} trailing bytes after last layer")
    return StackedModel(kinds[kind_code], layers)


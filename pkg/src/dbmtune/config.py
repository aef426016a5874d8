"""Experiment configuration: defaults, INI-style files and flag overrides."""

import configparser
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .deep import DBM, DBN
from .errors import ContractError
from .optim import DEFAULT_PARAMS, OptimizerConfig
from .rbm import CD, PCD
from .space import DEFAULT_BOUNDS, SearchSpace


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    format: str = "idx"
    test_dataset: Optional[str] = None
    width: int = 28
    height: int = 28
    threshold: int = 127
    model: str = DBN
    layers: int = 1
    learner: str = CD
    optimizer: str = "ihs"
    opt_params: dict = field(default_factory=dict)
    agents: int = 5
    iterations: int = 50
    runs: int = 20
    epochs: int = 10
    batch_size: int = 20
    train_fraction: float = 0.02
    train_count: Optional[int] = None
    test_count: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    init_sigma: float = 0.01
    gibbs_steps: int = 1
    sweeps: int = 3
    jobs: int = 1
    space: dict = field(default_factory=dict)

    def __post_init__(self):
        self.model = self.model.lower()
        self.learner = self.learner.lower()
        self.optimizer = self.optimizer.lower()
        self.format = self.format.lower()
        if self.model not in (DBN, DBM):
            raise ContractError(f"model must be dbn or dbm, got {self.model!r}")
        if self.learner not in (CD, PCD):
            raise ContractError(f"learner must be cd or pcd, got {self.learner!r}")
        if self.layers not in (1, 2, 3):
            raise ContractError("layers must be 1, 2 or 3")
        for name in ("agents", "iterations", "runs", "batch_size", "gibbs_steps", "jobs"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1")
        if self.epochs < 0 or self.sweeps < 0:
            raise ContractError("epochs and sweeps must be >= 0")
        for name in ("train_count", "test_count"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ContractError(f"{name} must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ContractError("train_fraction must lie strictly between 0 and 1")
        # validate optimizer and bounds eagerly
        self.optimizer_config()
        self.search_space()

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(self.optimizer, self.agents, self.iterations, dict(self.opt_params))

    def search_space(self) -> SearchSpace:
        bounds = {}
        for key, (lo, hi) in DEFAULT_BOUNDS.items():
            bounds[key] = (float(self.space.get(f"{key}_min", lo)), float(self.space.get(f"{key}_max", hi)))
        unknown = set(self.space) - {f"{k}_{s}" for k in DEFAULT_BOUNDS for s in ("min", "max")}
        if unknown:
            raise ContractError(f"unknown space keys: {sorted(unknown)}")
        return SearchSpace.for_layers(self.layers, bounds)

    def to_dict(self) -> dict:
        return asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ALIASES = {"iters": "iterations", "fmt": "format", "master_seed": "seed", "batch": "batch_size"}
_INTS = {"width", "height", "threshold", "layers", "agents", "iterations", "runs", "epochs",
         "batch_size", "train_count", "test_count", "seed", "gibbs_steps", "sweeps", "jobs"}
_FLOATS = {"train_fraction", "init_sigma"}


def _coerce_param(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def settings_to_config(settings: dict) -> ExperimentConfig:
    """Build a config from flat ``key -> string`` settings.

    Keys are ExperimentConfig field names, ``space.<dim>_min|max`` bounds, or
    ``opt.<algorithm>.<param>`` optimizer parameters; the latter only apply
    when ``<algorithm>`` is the selected optimizer.
    """
    kwargs = {}
    space = {}
    opt_params = {}
    for raw_key, value in settings.items():
        key = _ALIASES.get(raw_key.strip().lower(), raw_key.strip().lower())
        if value is None:
            continue
        if key.startswith("space."):
            space[key[len("space."):]] = float(value)
        elif key.startswith("opt."):
            parts = key.split(".")
            if len(parts) != 3 or parts[1] not in DEFAULT_PARAMS:
                raise ContractError(f"bad optimizer key {raw_key!r}; expected opt.<algorithm>.<param>")
            opt_params.setdefault(parts[1], {})[parts[2]] = _coerce_param(str(value))
        elif key in _FIELD_TYPES and key not in ("space", "opt_params"):
            try:
                if key in _INTS:
                    value = None if str(value).lower() in ("", "none") else int(value)
                elif key in _FLOATS:
                    value = float(value)
            except ValueError:
                raise ContractError(f"{raw_key}: cannot parse {value!r}") from None
            kwargs[key] = value
        else:
            raise ContractError(f"unknown configuration key {raw_key!r}")
    algorithm = str(kwargs.get("optimizer", "ihs")).lower()
    unknown_params = {
        (alg, p) for alg, params in opt_params.items() for p in params
        if p not in DEFAULT_PARAMS[alg]
    }
    if unknown_params:
        raise ContractError(f"unknown optimizer parameters: {sorted(unknown_params)}")
    kwargs["opt_params"] = opt_params.get(algorithm, {})
    kwargs["space"] = space
    return ExperimentConfig(**kwargs)


def read_config_file(path) -> dict:
    """Read ``key = value`` lines; section headers are optional and ignored."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ContractError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ContractError(f"{path}: {exc}") from None
    settings = {}
    for section in parser.sections():
        settings.update(parser.items(section))
    return settings

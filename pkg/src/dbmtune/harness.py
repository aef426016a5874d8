"""Experiment pipeline: candidate fitness, tuning runs, reports and comparisons."""

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import seeding
from .config import ExperimentConfig
from .data import BinaryDataset, load_dataset, split_train_test, subsample
from .deep import build_model, reconstruction_mse, train_greedy
from .errors import ContractError, NoEffectiveSamples
from .optim import run_optimizer
from .rbm import TrainConfig
from .space import Candidate, SearchSpace, decode
from .stats import log_pseudo_likelihood, summarize, wilcoxon_signed_rank

log = logging.getLogger(__name__)


def train_hypers(hypers, data, kind, learner, epochs, batch_size, seed, init_sigma=0.01,
                 gibbs_steps=1, monitor=None):
    """Build and greedily train a stack sized by the decoded per-layer hyperparameters."""
    data = np.asarray(data, dtype=np.float64)
    rng = np.random.default_rng(seed)
    model = build_model(kind, data.shape[1], [h.n_hidden for h in hypers], rng, init_sigma)
    cfgs = [
        TrainConfig(eta=h.eta, weight_decay=h.weight_decay, momentum=h.momentum, epochs=epochs,
                    batch_size=batch_size, learner=learner, gibbs_steps=gibbs_steps)
        for h in hypers
    ]
    traces = train_greedy(model, data, cfgs, rng, monitor=monitor)
    return model, traces


def fitness_of(candidate: Candidate, space: SearchSpace, train, kind, learner, epochs, batch_size,
               eval_seed=None, init_sigma=0.01, gibbs_steps=1, sweeps=3) -> float:
    """Training-set reconstruction MSE of the model trained with ``candidate``'s hyperparameters.

    A pure function of (candidate, eval_seed); numerical blow-ups during
    training give NaN, which the optimizer loop quarantines.
    """
    seed = candidate.eval_seed if eval_seed is None else eval_seed
    hypers = decode(space, candidate.x)
    try:
        model, _ = train_hypers(hypers, train, kind, learner, epochs, batch_size, seed,
                                init_sigma, gibbs_steps)
    except FloatingPointError:
        return math.nan
    return reconstruction_mse(model, train, sweeps)


@dataclass
class FitnessJob:
    """Picklable fitness callable so evaluations can run in worker processes."""

    space: SearchSpace
    train: np.ndarray
    kind: str
    learner: str
    epochs: int
    batch_size: int
    init_sigma: float = 0.01
    gibbs_steps: int = 1
    sweeps: int = 3

    def __call__(self, candidate: Candidate) -> float:
        return fitness_of(candidate, self.space, self.train, self.kind, self.learner, self.epochs,
                          self.batch_size, candidate.eval_seed, self.init_sigma,
                          self.gibbs_steps, self.sweeps)


@dataclass
class RunRecord:
    run: int
    seed: int
    best_x: list
    best_hyper: list
    best_fitness: float
    best_eval_seed: int
    n_evaluations: int
    trace: list
    test_mse: float
    pl_curve: list
    elapsed_s: float
    n_train: int
    n_test: int
    warnings: list = field(default_factory=list)
    flagged: bool = False


@dataclass
class RunReport:
    config: dict
    runs: list
    aggregate: dict

    def to_dict(self) -> dict:
        return {"config": self.config, "runs": [asdict(r) for r in self.runs], "aggregate": self.aggregate}

    @classmethod
    def from_dict(cls, obj: dict) -> "RunReport":
        return cls(obj["config"], [RunRecord(**r) for r in obj["runs"]], obj["aggregate"])

    def test_mse(self) -> list:
        return [r.test_mse for r in self.runs]


def _aggregate(runs) -> dict:
    mses = [r.test_mse for r in runs]
    times = [r.elapsed_s for r in runs]
    # quarantined fitness sits at float max, so the mean may overflow to inf
    with np.errstate(over="ignore"):
        best_mean = float(np.mean([r.best_fitness for r in runs]))
    agg = {
        "runs": len(runs),
        "test_mse_mean": float(np.mean(mses)),
        "test_mse_std": None,
        "best_fitness_mean": best_mean,
        "n_evaluations_total": int(sum(r.n_evaluations for r in runs)),
        "elapsed_s_mean": float(np.mean(times)),
        "elapsed_s_std": None,
        "flagged_runs": [r.run for r in runs if r.flagged],
    }
    if len(runs) >= 2:
        agg["test_mse_std"] = summarize(mses)[1]
        agg["elapsed_s_std"] = summarize(times)[1]
    return agg


def load_pools(cfg: ExperimentConfig):
    if cfg.dataset is None:
        raise ContractError("no dataset configured")
    train_pool = load_dataset(cfg.dataset, cfg.format, cfg.width, cfg.height, cfg.threshold)
    test_pool = None
    if cfg.test_dataset:
        test_pool = load_dataset(cfg.test_dataset, cfg.format, cfg.width, cfg.height, cfg.threshold)
    return train_pool, test_pool


def split_for_run(cfg: ExperimentConfig, train_pool: BinaryDataset, test_pool, rng):
    """Training and test images for one run; the two never share an image."""
    if test_pool is not None:
        if cfg.train_count is not None:
            train = subsample(train_pool, cfg.train_count, rng)
        else:
            train = subsample(train_pool, math.ceil(cfg.train_fraction * len(train_pool) - 1e-9), rng)
        test = test_pool if cfg.test_count is None else subsample(test_pool, cfg.test_count, rng)
        return train, test
    if cfg.train_count is not None:
        n_test = cfg.test_count if cfg.test_count is not None else len(train_pool) - cfg.train_count
        if cfg.train_count + n_test > len(train_pool) or n_test < 1:
            raise ContractError(
                f"{cfg.train_count} train + {n_test} test images exceed the {len(train_pool)} available"
            )
        order = rng.permutation(len(train_pool))
        return (train_pool.subset(order[:cfg.train_count]),
                train_pool.subset(order[cfg.train_count:cfg.train_count + n_test]))
    train, test = split_train_test(train_pool, cfg.train_fraction, rng)
    if cfg.test_count is not None:
        test = subsample(test, cfg.test_count, rng)
    return train, test


def run_single(cfg: ExperimentConfig, run: int, train: BinaryDataset, test: BinaryDataset,
               map_fn=map) -> RunRecord:
    space = cfg.search_space()
    opt_seed = seeding.derive_seed(cfg.seed, seeding.OPTIMIZER, run)
    train_x = train.images.astype(np.float64)
    job = FitnessJob(space, train_x, cfg.model, cfg.learner, cfg.epochs, cfg.batch_size,
                     cfg.init_sigma, cfg.gibbs_steps, cfg.sweeps)
    start = time.perf_counter()
    result = run_optimizer(cfg.optimizer_config(), space, job, opt_seed, map_fn=map_fn)
    elapsed = time.perf_counter() - start

    # retrain the winner exactly as it was evaluated and monitor the first layer
    pl_rng = seeding.derive_rng(cfg.seed, seeding.PSEUDO_LIKELIHOOD, run)
    curve = []

    def monitor(layer_index, epoch, layer, error):
        if layer_index == 0:
            curve.append({"epoch": epoch + 1, "log_pl": log_pseudo_likelihood(layer, train_x, pl_rng),
                          "mse": error})

    hypers = decode(space, result.best.x)
    warnings = list(result.warnings)
    flagged = False
    try:
        model, _ = train_hypers(hypers, train_x, cfg.model, cfg.learner, cfg.epochs, cfg.batch_size,
                                result.best.eval_seed, cfg.init_sigma, cfg.gibbs_steps, monitor)
        test_mse = reconstruction_mse(model, test.images, cfg.sweeps)
    except FloatingPointError as exc:
        test_mse = math.nan
        warnings.append(f"final training failed: {exc}")
    if not math.isfinite(test_mse):
        flagged = True
        warnings.append("non-finite test MSE")
    return RunRecord(
        run=run,
        seed=opt_seed,
        best_x=[float(v) for v in result.best.x],
        best_hyper=[h._asdict() for h in hypers],
        best_fitness=float(result.best.fitness),
        best_eval_seed=int(result.best.eval_seed),
        n_evaluations=result.n_evaluations,
        trace=[asdict(row) for row in result.trace],
        test_mse=float(test_mse),
        pl_curve=curve,
        elapsed_s=elapsed,
        n_train=len(train),
        n_test=len(test),
        warnings=warnings,
        flagged=flagged,
    )


def run_experiment(cfg: ExperimentConfig, pools=None) -> RunReport:
    """Run ``cfg.runs`` independently seeded tuning runs and aggregate them.

    ``pools`` may supply already-loaded (train_pool, test_pool) datasets.
    """
    train_pool, test_pool = pools if pools is not None else load_pools(cfg)
    executor = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    map_fn = executor.map if executor else map
    try:
        records = []
        for run in range(cfg.runs):
            split_rng = seeding.derive_rng(cfg.seed, seeding.SPLIT, run)
            train, test = split_for_run(cfg, train_pool, test_pool, split_rng)
            record = run_single(cfg, run, train, test, map_fn)
            log.info("run %d: best fitness %.5f, test MSE %.5f, %.1fs",
                     run, record.best_fitness, record.test_mse, record.elapsed_s)
            records.append(record)
    finally:
        if executor:
            executor.shutdown()
    return RunReport(cfg.to_dict(), records, _aggregate(records))


# --- comparison -----------------------------------------------------------

@dataclass
class Comparison:
    names: list
    cells: list  # cells[i][j]: WilcoxonResult, or None when no effective samples

    def symbol(self, i, j) -> str:
        cell = self.cells[i][j]
        return "≠" if cell is not None and cell.significant_at_0_05 else "="

    def to_dict(self) -> dict:
        return {
            "names": self.names,
            "cells": [[None if c is None else c.as_dict() for c in row] for row in self.cells],
            "symbols": [[self.symbol(i, j) for j in range(len(self.names))] for i in range(len(self.names))],
        }

    def format_table(self) -> str:
        width = max(len(n) for n in self.names) + 2
        lines = [" " * width + "".join(n.rjust(width) for n in self.names)]
        for i, name in enumerate(self.names):
            lines.append(name.ljust(width) + "".join(self.symbol(i, j).rjust(width) for j in range(len(self.names))))
        return "\n".join(lines)


def compare_reports(reports, names=None) -> Comparison:
    """Pairwise two-sided Wilcoxon tests over the per-run test MSE of each report."""
    reports = list(reports)
    if len(reports) < 2:
        raise ContractError("need at least two reports to compare")
    samples = [r.test_mse() if isinstance(r, RunReport) else list(r) for r in reports]
    if len({len(s) for s in samples}) != 1:
        raise ContractError(f"reports have unequal run counts: {[len(s) for s in samples]}")
    if names is None:
        names = [r.config.get("optimizer", f"r{i}") if isinstance(r, RunReport) else f"r{i}"
                 for i, r in enumerate(reports)]
    cells = []
    for x in samples:
        row = []
        for y in samples:
            try:
                row.append(wilcoxon_signed_rank(x, y))
            except NoEffectiveSamples:
                row.append(None)
        cells.append(row)
    return Comparison(list(names), cells)


# --- output ---------------------------------------------------------------

def _strip_elapsed(obj):
    if isinstance(obj, dict):
        return {k: _strip_elapsed(v) for k, v in obj.items() if not k.startswith("elapsed")}
    if isinstance(obj, list):
        return [_strip_elapsed(v) for v in obj]
    return obj


def report_json(report: RunReport, canonical: bool = False) -> str:
    obj = report.to_dict()
    if canonical:
        obj = _strip_elapsed(obj)
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def load_report(path) -> RunReport:
    with open(path) as fh:
        return RunReport.from_dict(json.load(fh))


def emit_outputs(report: RunReport, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": os.path.join(out_dir, "report.json"),
        "convergence": os.path.join(out_dir, "convergence.csv"),
        "pl_curve": os.path.join(out_dir, "pl_curve.csv"),
    }
    with open(paths["report"], "w") as fh:
        fh.write(report_json(report))
    with open(paths["convergence"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "iteration", "best_fitness", "mean_fitness", "elapsed_s"])
        for rec in report.runs:
            for row in rec.trace:
                writer.writerow([rec.run, row["iteration"], repr(row["best_fitness"]),
                                 repr(row["mean_fitness"]), repr(row["elapsed_s"])])
    with open(paths["pl_curve"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "epoch", "log_pl", "mse"])
        for rec in report.runs:
            for row in rec.pl_curve:
                writer.writerow([rec.run, row["epoch"], repr(row["log_pl"]), repr(row["mse"])])
    return paths

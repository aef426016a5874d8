"""Command-line entry point: tune, train, reconstruct, stats, bench."""

import argparse
import json
import logging
import sys

import numpy as np

from . import seeding
from .config import ExperimentConfig, read_config_file, settings_to_config
from .data import load_dataset
from .deep import load_model, reconstruction_mse, save_model
from .errors import ContractError, DataFormatError
from .harness import compare_reports, emit_outputs, load_report, run_experiment, train_hypers
from .optim import ALGORITHMS, OptimizerConfig, run_optimizer
from .space import LayerHyper, SearchSpace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

# flag dest -> config key
_CONFIG_FLAGS = {
    "dataset": "dataset", "format": "format", "test_dataset": "test_dataset", "width": "width",
    "height": "height", "threshold": "threshold", "model": "model", "layers": "layers",
    "learner": "learner", "optimizer": "optimizer", "agents": "agents", "iters": "iterations",
    "runs": "runs", "epochs": "epochs", "batch_size": "batch_size",
    "train_fraction": "train_fraction", "train_count": "train_count", "test_count": "test_count",
    "seed": "seed", "out": "out", "init_sigma": "init_sigma", "gibbs_steps": "gibbs_steps",
    "sweeps": "sweeps", "jobs": "jobs",
}


def _add_experiment_flags(p):
    p.add_argument("--config", help="INI-style key = value file; flags override it")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=["idx", "semeion", "csv"])
    p.add_argument("--test-dataset", dest="test_dataset")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--threshold", type=int)
    p.add_argument("--model", choices=["dbn", "dbm"])
    p.add_argument("--layers", type=int)
    p.add_argument("--learner", choices=["cd", "pcd"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--train-count", dest="train_count", type=int)
    p.add_argument("--test-count", dest="test_count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--init-sigma", dest="init_sigma", type=float)
    p.add_argument("--gibbs-steps", dest="gibbs_steps", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="extra config key, e.g. opt.ihs.hmcr=0.9 or space.n_max=50")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbmtune", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    tune = sub.add_parser("tune", help="run the full tuning experiment")
    _add_experiment_flags(tune)
    tune.add_argument("--optimizer", choices=ALGORITHMS)
    tune.add_argument("--agents", type=int)
    tune.add_argument("--iters", type=int)
    tune.add_argument("--runs", type=int)
    tune.add_argument("--jobs", type=int)
    tune.add_argument("--out")

    train = sub.add_parser("train", help="train one model with fixed hyperparameters")
    _add_experiment_flags(train)
    train.add_argument("--hidden", type=int, nargs="+", required=True, help="hidden units per layer")
    train.add_argument("--eta", type=float, default=0.1)
    train.add_argument("--momentum", type=float, default=0.0)
    train.add_argument("--weight-decay", dest="weight_decay", type=float, default=0.0)
    train.add_argument("--save", help="write the trained model here")

    rec = sub.add_parser("reconstruct", help="reconstruction MSE of a saved model on a dataset")
    rec.add_argument("model_file")
    rec.add_argument("dataset")
    rec.add_argument("--format", default="idx", choices=["idx", "semeion", "csv"])
    rec.add_argument("--width", type=int, default=28)
    rec.add_argument("--height", type=int, default=28)
    rec.add_argument("--threshold", type=int, default=127)
    rec.add_argument("--sweeps", type=int, default=3)

    stats = sub.add_parser("stats", help="pairwise Wilcoxon tests over report.json files")
    stats.add_argument("reports", nargs="+")
    stats.add_argument("--json", action="store_true", help="print the full matrix as JSON")

    bench = sub.add_parser("bench", help="run optimizers on an analytic test function")
    bench.add_argument("--function", choices=sorted(BENCH_FUNCTIONS), default="sphere")
    bench.add_argument("--optimizer", choices=ALGORITHMS, nargs="+", default=list(ALGORITHMS))
    bench.add_argument("--dim", type=int, default=5)
    bench.add_argument("--agents", type=int, default=5)
    bench.add_argument("--iters", type=int, default=200)
    bench.add_argument("--seeds", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    return parser


def sphere(x):
    return float(np.sum(np.square(x)))


def rastrigin(x):
    x = np.asarray(x)
    return float(10 * x.size + np.sum(x * x - 10 * np.cos(2 * np.pi * x)))


def rosenbrock(x):
    x = np.asarray(x)
    return float(np.sum(100 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


BENCH_FUNCTIONS = {"sphere": (sphere, 5.0), "rastrigin": (rastrigin, 5.12), "rosenbrock": (rosenbrock, 5.0)}


def _candidate_fn(f):
    def fitness(candidate):
        return f(candidate.x)
    return fitness


def config_from_args(args, **defaults) -> ExperimentConfig:
    settings = dict(defaults)
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for dest, key in _CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[key] = value
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ContractError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        settings[key.strip()] = value.strip()
    return settings_to_config(settings)


def cmd_tune(args) -> int:
    cfg = config_from_args(args)
    report = run_experiment(cfg)
    agg = report.aggregate
    std = agg["test_mse_std"]
    print(f"{cfg.optimizer} {cfg.model} L={cfg.layers} {cfg.learner}: test MSE "
          f"{agg['test_mse_mean']:.5f}" + ("" if std is None else f" ± {std:.5f}")
          + f" over {agg['runs']} runs")
    if cfg.out:
        paths = emit_outputs(report, cfg.out)
        print("wrote " + ", ".join(paths.values()))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = config_from_args(args, layers=len(args.hidden))
    if len(args.hidden) != cfg.layers:
        raise ContractError(f"--hidden gives {len(args.hidden)} sizes but layers = {cfg.layers}")
    if not cfg.dataset:
        raise ContractError("train needs --dataset")
    ds = load_dataset(cfg.dataset, cfg.format, cfg.width, cfg.height, cfg.threshold)
    hypers = [LayerHyper(n, args.eta, args.momentum, args.weight_decay) for n in args.hidden]
    seed = seeding.derive_seed(cfg.seed, seeding.FINAL_TRAIN, 0)
    data = ds.images.astype(np.float64)
    model, traces = train_hypers(hypers, data, cfg.model, cfg.learner, cfg.epochs, cfg.batch_size,
                                 seed, cfg.init_sigma, cfg.gibbs_steps)
    for i, trace in enumerate(traces):
        if trace:
            print(f"layer {i}: epoch 1 error {trace[0]:.5f}, epoch {len(trace)} error {trace[-1]:.5f}")
    print(f"train MSE {reconstruction_mse(model, data, cfg.sweeps):.5f}")
    if args.save:
        save_model(model, args.save)
        print(f"saved {args.save}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    try:
        model = load_model(args.model_file)
    except ContractError as exc:
        raise DataFormatError(f"{args.model_file}: {exc}") from None
    ds = load_dataset(args.dataset, args.format, args.width, args.height, args.threshold)
    if ds.n_pixels != model.n_visible:
        raise DataFormatError(f"dataset has {ds.n_pixels} pixels but the model expects {model.n_visible}")
    print(f"{reconstruction_mse(model, ds.images, args.sweeps):.6f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    reports = [load_report(path) for path in args.reports]
    comparison = compare_reports(reports, names=[
        f"{r.config.get('optimizer')}[{i}]" for i, r in enumerate(reports)
    ])
    if args.json:
        print(json.dumps(comparison.to_dict(), indent=2))
    else:
        for name, report in zip(comparison.names, reports):
            agg = report.aggregate
            print(f"{name}: {agg['test_mse_mean']:.5f} ± {agg['test_mse_std'] or 0.0:.5f}")
        print(comparison.format_table())
    return EXIT_OK


def cmd_bench(args) -> int:
    f, half_width = BENCH_FUNCTIONS[args.function]
    space = SearchSpace(np.full(args.dim, -half_width), np.full(args.dim, half_width))
    for name in args.optimizer:
        cfg = OptimizerConfig(name, args.agents, args.iters)
        bests = []
        evals = 0
        for s in range(args.seeds):
            result = run_optimizer(cfg, space, _candidate_fn(f), seeding.derive_seed(args.seed, s))
            bests.append(result.best.fitness)
            evals = result.n_evaluations
        print(f"{name:7s} median best {np.median(bests):.4e}  evaluations/run {evals}")
    return EXIT_OK


COMMANDS = {"tune": cmd_tune, "train": cmd_train, "reconstruct": cmd_reconstruct,
            "stats": cmd_stats, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ContractError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

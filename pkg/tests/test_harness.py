import csv
import json
import math

import numpy as np
import pytest

from dbmtune import seeding
from dbmtune.config import ExperimentConfig
from dbmtune.data import BinaryDataset, write_csv_binary
from dbmtune.deep import reconstruction_mse
from dbmtune.errors import ContractError
from dbmtune.harness import (
    FitnessJob,
    RunReport,
    compare_reports,
    emit_outputs,
    fitness_of,
    load_report,
    report_json,
    run_experiment,
    split_for_run,
    train_hypers,
)
from dbmtune.optim import evaluation_budget, evaluation_seed
from dbmtune.space import Candidate, SearchSpace, decode, sample_uniform


def stripes(n=60, seed=0):
    """8x8 images: random horizontal bars plus a little pixel noise."""
    r = np.random.default_rng(seed)
    bars = r.random((n, 8)) < 0.3
    images = np.repeat(bars, 8, axis=1).astype(np.uint8)
    flip = r.random(images.shape) < 0.02
    return BinaryDataset(images ^ flip, 8, 8, "stripes")


def small_cfg(**kw):
    base = dict(width=8, height=8, epochs=2, batch_size=10, agents=4, iterations=2, runs=2,
                train_count=30, test_count=20, seed=3,
                space={"n_min": 5, "n_max": 12})
    base.update(kw)
    return ExperimentConfig(**base)


# fitness_of

def test_fitness_in_unit_interval_and_deterministic():
    data = stripes().images.astype(float)
    space = SearchSpace.for_layers(2)
    cand = sample_uniform(space, np.random.default_rng(0))
    a = fitness_of(cand, space, data, "dbm", "pcd", 2, 10, eval_seed=11)
    b = fitness_of(cand, space, data, "dbm", "pcd", 2, 10, eval_seed=11)
    assert 0.0 <= a <= 1.0 and a == b


def test_fitness_zero_epochs_zero_init_is_quarter():
    data = stripes().images.astype(float)
    space = SearchSpace.for_layers(1)
    cand = sample_uniform(space, np.random.default_rng(0))
    assert fitness_of(cand, space, data, "dbn", "cd", 0, 10, eval_seed=1, init_sigma=0.0) == 0.25


def test_fitness_job_uses_candidate_seed():
    data = stripes().images.astype(float)
    space = SearchSpace.for_layers(1)
    job = FitnessJob(space, data, "dbn", "cd", 2, 10)
    cand = Candidate(sample_uniform(space, np.random.default_rng(0)).x, eval_seed=5)
    assert job(cand) == fitness_of(cand, space, data, "dbn", "cd", 2, 10, eval_seed=5)


def test_fitness_nan_on_blowup(monkeypatch):
    from dbmtune import harness

    def boom(*args, **kwargs):
        raise FloatingPointError("overflow")

    monkeypatch.setattr(harness, "train_hypers", boom)
    space = SearchSpace.for_layers(1)
    assert math.isnan(fitness_of(Candidate(space.lower.copy()), space, np.zeros((2, 64)), "dbn", "cd", 1, 1))


def test_train_hypers_sizes_layers():
    data = stripes().images.astype(float)
    space = SearchSpace.for_layers(3)
    hypers = decode(space, space.upper)
    model, traces = train_hypers(hypers, data, "dbn", "cd", 1, 20, seed=0)
    assert [lyr.n for lyr in model.layers] == [100, 100, 100] and model.layers[0].m == 64
    assert len(traces) == 3


# run_experiment

def test_minimal_pipeline_matches_hand_stepped_oracle():
    ds = stripes()
    cfg = small_cfg(optimizer="rs", runs=1, iterations=1, agents=3)
    report = run_experiment(cfg, pools=(ds, None))
    run = report.runs[0]

    split_rng = seeding.derive_rng(cfg.seed, seeding.SPLIT, 0)
    train, test = split_for_run(cfg, ds, None, split_rng)
    opt_seed = seeding.derive_seed(cfg.seed, seeding.OPTIMIZER, 0)
    r = np.random.default_rng(opt_seed)
    space = cfg.search_space()
    evaluated = []
    for it in range(2):
        for k in range(3):
            cand = Candidate(r.uniform(space.lower, space.upper), eval_seed=evaluation_seed(opt_seed, it, k))
            f = fitness_of(cand, space, train.images, "dbn", "cd", cfg.epochs, cfg.batch_size)
            evaluated.append((f, cand))
    f_best, best = min(evaluated, key=lambda t: t[0])
    assert run.best_fitness == f_best
    assert run.best_x == best.x.tolist() and run.best_eval_seed == best.eval_seed
    model, _ = train_hypers(decode(space, best.x), train.images, "dbn", "cd", cfg.epochs, cfg.batch_size,
                            best.eval_seed)
    assert run.test_mse == reconstruction_mse(model, test.images)
    assert run.n_evaluations == 6 and len(run.trace) == 2 and len(run.pl_curve) == cfg.epochs


def test_report_contents_and_budget():
    cfg = small_cfg(optimizer="cs")
    report = run_experiment(cfg, pools=(stripes(), None))
    assert len(report.runs) == 2
    for run in report.runs:
        best = [row["best_fitness"] for row in run.trace]
        assert all(b <= a for a, b in zip(best, best[1:]))
        assert run.n_evaluations == evaluation_budget(cfg.optimizer_config())
        assert run.elapsed_s >= 0 and all(row["elapsed_s"] >= 0 for row in run.trace)
        assert (run.n_train, run.n_test) == (30, 20)
        assert [p["epoch"] for p in run.pl_curve] == [1, 2]
        assert 0 <= run.test_mse <= 1
    agg = report.aggregate
    assert agg["test_mse_mean"] == pytest.approx(np.mean([r.test_mse for r in report.runs]))
    assert agg["test_mse_std"] == pytest.approx(np.std([r.test_mse for r in report.runs], ddof=1))


def test_same_seed_gives_identical_canonical_json():
    cfg = small_cfg(optimizer="jade")
    one = report_json(run_experiment(cfg, pools=(stripes(), None)), canonical=True)
    two = report_json(run_experiment(cfg, pools=(stripes(), None)), canonical=True)
    assert one == two and "elapsed" not in one
    other = report_json(run_experiment(small_cfg(optimizer="jade", seed=4), pools=(stripes(), None)),
                        canonical=True)
    assert other != one


def test_parallel_jobs_do_not_change_results():
    cfg = small_cfg(optimizer="bsa", runs=1)
    serial = report_json(run_experiment(cfg, pools=(stripes(), None)), canonical=True)
    cfg_par = small_cfg(optimizer="bsa", runs=1, jobs=2)
    parallel = json.loads(report_json(run_experiment(cfg_par, pools=(stripes(), None)), canonical=True))
    expected = json.loads(serial)
    expected["config"]["jobs"] = 2
    assert parallel == expected


def unique_images(n):
    bits = np.random.default_rng(0).permutation(2 ** 16)[:n]
    return BinaryDataset(((bits[:, None] >> np.arange(64) % 16) & 1).astype(np.uint8), 8, 8)


@pytest.mark.parametrize("kw", [
    dict(train_count=30, test_count=20),
    dict(train_count=30),
    dict(train_fraction=0.3),
    dict(train_fraction=0.3, test_count=10),
])
def test_split_never_shares_images(kw):
    ds = unique_images(80)
    cfg = ExperimentConfig(width=8, height=8, **kw)
    train, test = split_for_run(cfg, ds, None, np.random.default_rng(0))
    a = {tuple(r) for r in train.images}
    b = {tuple(r) for r in test.images}
    assert not a & b and len(a) == len(train)


def test_split_with_separate_test_pool():
    ds = unique_images(80)
    cfg = ExperimentConfig(width=8, height=8, train_count=10, test_count=5)
    train, test = split_for_run(cfg, ds, unique_images(40), np.random.default_rng(0))
    assert (len(train), len(test)) == (10, 5)


def test_split_too_many_images():
    cfg = ExperimentConfig(width=8, height=8, train_count=70, test_count=20)
    with pytest.raises(ContractError):
        split_for_run(cfg, unique_images(80), None, np.random.default_rng(0))


def test_nan_run_is_flagged(monkeypatch):
    from dbmtune import harness
    monkeypatch.setattr(harness, "reconstruction_mse", lambda *a, **k: math.nan)
    report = run_experiment(small_cfg(optimizer="rs", runs=2), pools=(stripes(), None))
    assert report.aggregate["flagged_runs"] == [0, 1]
    assert all(r.flagged and r.warnings for r in report.runs)


def test_missing_dataset_is_a_contract_error():
    with pytest.raises(ContractError):
        run_experiment(small_cfg())


# compare_reports

def test_compare_report_with_itself():
    report = run_experiment(small_cfg(optimizer="rs", runs=5, iterations=1), pools=(stripes(), None))
    comp = compare_reports([report, report])
    assert all(cell is None for row in comp.cells for cell in row)
    assert comp.symbol(0, 1) == "="


def test_compare_matrix_symmetric_and_symbols():
    r = np.random.default_rng(0)
    a = r.normal(0.10, 0.001, 8)
    b = a + 0.01 + r.normal(0, 0.0001, 8)
    c = a + r.normal(0, 0.001, 8)
    comp = compare_reports([a, b, c], names=["a", "b", "c"])
    for i in range(3):
        for j in range(3):
            x, y = comp.cells[i][j], comp.cells[j][i]
            assert (x is None) == (y is None)
            if x is not None:
                assert (x.W_statistic, x.p_value) == (y.W_statistic, y.p_value)
    assert comp.symbol(0, 1) == "≠" and comp.symbol(0, 2) == "="
    assert "a" in comp.format_table()
    json.dumps(comp.to_dict())


def test_compare_disjoint_seeds_mostly_equal():
    reports = [run_experiment(small_cfg(optimizer="rs", runs=6, iterations=1, seed=s), pools=(stripes(), None))
               for s in (10, 20, 30)]
    comp = compare_reports(reports)
    off = [comp.symbol(i, j) for i in range(3) for j in range(3) if i != j]
    assert off.count("=") >= 4


def test_compare_errors():
    with pytest.raises(ContractError):
        compare_reports([[1, 2, 3, 4, 5]])
    with pytest.raises(ContractError):
        compare_reports([[1, 2, 3, 4, 5], [1, 2, 3, 4, 5, 6]])


# outputs

def test_emit_outputs(tmp_path):
    cfg = small_cfg(optimizer="aiwpso")
    report = run_experiment(cfg, pools=(stripes(), None))
    paths = emit_outputs(report, tmp_path / "out")
    with open(paths["convergence"]) as fh:
        conv = list(csv.reader(fh))
    assert conv[0] == ["run", "iteration", "best_fitness", "mean_fitness", "elapsed_s"]
    assert len(conv) - 1 == cfg.runs * (cfg.iterations + 1)
    with open(paths["pl_curve"]) as fh:
        pl = list(csv.reader(fh))
    assert pl[0] == ["run", "epoch", "log_pl", "mse"] and len(pl) - 1 == cfg.runs * cfg.epochs
    back = load_report(paths["report"])
    assert back == report


def test_emit_outputs_empty_traces(tmp_path):
    paths = emit_outputs(RunReport({}, [], {}), tmp_path)
    assert open(paths["convergence"]).read() == "run,iteration,best_fitness,mean_fitness,elapsed_s\n"
    assert open(paths["pl_curve"]).read() == "run,epoch,log_pl,mse\n"


def test_run_from_csv_file(tmp_path):
    write_csv_binary(stripes(), tmp_path / "s.csv")
    cfg = small_cfg(dataset=str(tmp_path / "s.csv"), format="csv", runs=1, optimizer="ihs")
    assert len(run_experiment(cfg).runs) == 1

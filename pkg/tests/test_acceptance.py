"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``; the lines are also
repeated in the terminal summary.
"""

import itertools
import math
import os
import pathlib
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbmtune.config import ExperimentConfig
from dbmtune.data import load_csv_binary, load_semeion
from dbmtune.harness import report_json, run_experiment
from dbmtune.optim import ALGORITHMS, METAHEURISTICS, OptimizerConfig, evaluation_budget, run_optimizer
from dbmtune.rbm import RbmLayer, TrainConfig, energy, free_energy, init_layer, train_rbm
from dbmtune.space import SearchSpace
from dbmtune.stats import all_states, exact_log_likelihood, exact_log_likelihood_grad, log_partition
from dbmtune.stats import wilcoxon_signed_rank

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"
MNIST_SUBSET = DATA_DIR / "mnist5k-images-idx3-ubyte.gz"

DESK = dict(dataset=str(MNIST_SUBSET), model="dbn", layers=1, learner="cd", agents=5, iterations=10,
            runs=5, epochs=10, batch_size=20, train_count=200, test_count=2000, seed=2017)


def desk_config(**kw):
    merged = dict(DESK)
    merged.update(kw)
    return ExperimentConfig(**merged)


@pytest.fixture(scope="module")
def desk_reports():
    """Desk-scale tuning runs, one report per metaheuristic, with total wall-clock."""
    return {}


def desk_report(cache, optimizer):
    if optimizer not in cache:
        start = time.perf_counter()
        report = run_experiment(desk_config(optimizer=optimizer))
        cache[optimizer] = (report, time.perf_counter() - start)
    return cache[optimizer]


def random_layer(m, n, seed, scale=1.0):
    r = np.random.default_rng(seed)
    return RbmLayer(r.normal(0, scale, (m, n)), r.normal(0, scale, m), r.normal(0, scale, n))


# 1

def test_criterion_1_exact_model_oracles(acceptance_report):
    start = time.perf_counter()
    worst = {"sum": 0.0, "grad": 0.0, "free": 0.0}
    ok = False
    try:
        r = np.random.default_rng(1)
        for case in range(12):
            m = int(r.integers(1, 9))
            n = int(r.integers(1, 15 - m))
            layer = random_layer(m, n, case, scale=0.8)
            vs = all_states(m)
            logp = -free_energy(layer, vs) - log_partition(layer)
            worst["sum"] = max(worst["sum"], abs(np.exp(logp).sum() - 1.0))
            # free energy against a direct sum over hidden states
            hs = all_states(n)
            for v in vs[:: max(1, len(vs) // 8)]:
                oracle = -math.log(sum(math.exp(-energy(layer, v, h)) for h in hs))
                worst["free"] = max(worst["free"], abs(free_energy(layer, v) - oracle))
        layer = random_layer(4, 3, 99, scale=0.7)
        data = (np.random.default_rng(5).random((6, 4)) < 0.5).astype(float)
        dW, _, _ = exact_log_likelihood_grad(layer, data)
        for i, j in itertools.product(range(4), range(3)):
            up, down = layer.copy(), layer.copy()
            up.W[i, j] += 1e-5
            down.W[i, j] -= 1e-5
            fd = (exact_log_likelihood(up, data) - exact_log_likelihood(down, data)) / 2e-5
            worst["grad"] = max(worst["grad"], abs(fd - dW[i, j]))
        elapsed = time.perf_counter() - start
        ok = worst["sum"] < 1e-9 and worst["grad"] < 1e-6 and worst["free"] < 1e-10 and elapsed < 30
    finally:
        acceptance_report("1 exact-model oracles", ok,
                          f"sum err {worst['sum']:.1e}, grad err {worst['grad']:.1e}, "
                          f"free-energy err {worst['free']:.1e}, {time.perf_counter() - start:.1f}s")
    assert ok


# 2

def test_criterion_2_cd_learns(acceptance_report):
    start = time.perf_counter()
    patterns = np.array([[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1], [1, 0, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]], float)
    wins = 0
    ok = False
    try:
        for seed in range(20):
            r = np.random.default_rng(seed)
            layer = init_layer(6, 4, r)
            before = exact_log_likelihood(layer, patterns)
            train_rbm(layer, patterns, TrainConfig(eta=0.1, epochs=500, batch_size=4), r)
            wins += exact_log_likelihood(layer, patterns) > before
        elapsed = time.perf_counter() - start
        ok = wins >= 19 and elapsed < 60
    finally:
        acceptance_report("2 CD-1 improves exact likelihood", ok,
                          f"{wins}/20 seeds, {time.perf_counter() - start:.1f}s")
    assert ok


# 3

def test_criterion_3_optimizer_benchmark(acceptance_report):
    start = time.perf_counter()
    space = SearchSpace(np.full(5, -5.0), np.full(5, 5.0))

    def sphere(c):
        return float(np.sum(c.x ** 2))

    details, failing = [], []
    try:
        for algorithm in ALGORITHMS:
            at10, at200, monotone = [], [], True
            for seed in range(20):
                trace = run_optimizer(OptimizerConfig(algorithm, 5, 200), space, sphere, seed).trace
                best = [row.best_fitness for row in trace]
                monotone &= all(b <= a for a, b in zip(best, best[1:]))
                at10.append(best[10])
                at200.append(best[200])
            ratio = np.median(at200) / np.median(at10)
            details.append(f"{algorithm} {ratio:.2g}")
            if not (monotone and ratio <= 0.10):
                failing.append(algorithm)
    finally:
        elapsed = time.perf_counter() - start
        ok = not failing and elapsed < 60 and len(details) == len(ALGORITHMS)
        acceptance_report("3 sphere benchmark, all 8 strategies", ok,
                          "median ratio " + ", ".join(details)
                          + (f"; failing: {', '.join(failing)}" if failing else "") + f", {elapsed:.1f}s")
    assert ok, f"criterion 3 fails for {failing}"


# 4

def test_criterion_4_random_search_oracle(acceptance_report):
    cases = []

    @settings(max_examples=100, deadline=None, database=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 15), st.integers(1, 6))
    def check(seed, agents, iterations, d):
        space = SearchSpace(np.full(d, -3.0), np.full(d, 2.0))
        result = run_optimizer(OptimizerConfig("rs", agents, iterations), space,
                               lambda c: float(np.sum(c.x ** 2)), seed)
        r = np.random.default_rng(seed)
        best, oracle = math.inf, []
        for _ in range(iterations + 1):
            for _ in range(agents):
                best = min(best, float(np.sum(r.uniform(space.lower, space.upper) ** 2)))
            oracle.append(best)
        cases.append(1)
        assert [row.best_fitness for row in result.trace] == oracle

    ok = False
    try:
        check()
        ok = len(cases) >= 100
    finally:
        acceptance_report("4 random search equals running-minimum oracle", ok, f"{len(cases)} cases")
    assert ok


# 5

def _enumerated_p(d):
    d = [v for v in d if v != 0]
    mags = sorted(abs(v) for v in d)
    rank = {}
    i = 0
    while i < len(mags):
        j = i
        while j < len(mags) and mags[j] == mags[i]:
            j += 1
        rank[mags[i]] = (i + 1 + j) / 2
        i = j
    ranks = [rank[abs(v)] for v in d]
    total = sum(ranks)
    w_plus = sum(rk for rk, v in zip(ranks, d) if v > 0)
    w = min(w_plus, total - w_plus)
    hits = 0
    for signs in itertools.product((False, True), repeat=len(ranks)):
        s = sum(rk for rk, sg in zip(ranks, signs) if sg)
        hits += min(s, total - s) <= w
    return hits / 2 ** len(ranks)


def test_criterion_5_wilcoxon(acceptance_report):
    r = np.random.default_rng(5)
    mismatches, cases = 0, 0
    ok = False
    try:
        while cases < 1000:
            n = int(r.integers(5, 13))
            x = r.integers(-5, 6, n).astype(float)
            y = r.integers(-5, 6, n).astype(float) if r.random() < 0.5 else x + r.normal(0, 1, n)
            if np.all(x == y):
                continue
            cases += 1
            mismatches += wilcoxon_signed_rank(x, y).p_value != _enumerated_p(list(x - y))
        fixed = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 0, 0, 0, 0]).p_value
        ok = mismatches == 0 and fixed == 0.0625
    finally:
        acceptance_report("5 exact Wilcoxon p", ok, f"{cases} cases, {mismatches} mismatches")
    assert ok


# 6, 7

def test_criterion_6_desk_scale_mnist(acceptance_report, desk_reports):
    start = time.perf_counter()
    ok = False
    mean = math.nan
    try:
        report, _ = desk_report(desk_reports, "ihs")
        mean = report.aggregate["test_mse_mean"]
        ok = 0.07 <= mean <= 0.11 and time.perf_counter() - start < 15 * 60
    finally:
        acceptance_report("6 desk-scale MNIST test MSE in [0.07, 0.11]", ok,
                          f"mean {mean:.5f} over 5 runs, {time.perf_counter() - start:.0f}s")
    assert ok


def test_criterion_7_training_curves(acceptance_report, desk_reports):
    ok = False
    detail = ""
    try:
        report, _ = desk_report(desk_reports, "ihs")
        pl1 = [run.pl_curve[0]["log_pl"] for run in report.runs]
        pl10 = [run.pl_curve[9]["log_pl"] for run in report.runs]
        pl_runs = sum(b > a for a, b in zip(pl1, pl10))
        mse_runs = sum(run.pl_curve[9]["mse"] < run.pl_curve[0]["mse"] for run in report.runs)
        ok = np.median(pl10) > np.median(pl1) and mse_runs >= 4
        detail = (f"median log-PL {np.median(pl1):.1f} -> {np.median(pl10):.1f}, "
                  f"log-PL up in {pl_runs}/5, train MSE down in {mse_runs}/5")
    finally:
        acceptance_report("7 log-PL and train MSE improve over epochs", ok, detail)
    assert ok


# 8

def test_criterion_8_timing_shape(acceptance_report, desk_reports):
    ok = False
    detail = ""
    try:
        budgets = {a: evaluation_budget(OptimizerConfig(a, 5, 10)) for a in METAHEURISTICS}
        population = [budgets[a] for a in METAHEURISTICS if a not in ("ihs", "cs")]
        counts_ok = budgets["ihs"] < budgets["cs"] < min(population)
        times = {}
        for algorithm in METAHEURISTICS:
            report, _ = desk_report(desk_reports, algorithm)
            assert all(run.n_evaluations == budgets[algorithm] for run in report.runs)
            times[algorithm] = sum(run.elapsed_s for run in report.runs)
        fastest = min(times, key=times.get)
        ok = counts_ok and fastest == "ihs"
        detail = ("evaluations " + ", ".join(f"{a} {budgets[a]}" for a in METAHEURISTICS)
                  + "; seconds " + ", ".join(f"{a} {times[a]:.1f}" for a in METAHEURISTICS))
    finally:
        acceptance_report("8 evaluation counts and IHS fastest", ok, detail)
    assert ok


# 9

def test_criterion_9_reproducible_report(acceptance_report):
    ok = False
    try:
        cfg = desk_config(runs=2, iterations=3, optimizer="cobide")
        first = report_json(run_experiment(cfg), canonical=True)
        second = report_json(run_experiment(cfg), canonical=True)
        ok = first == second
    finally:
        acceptance_report("9a identical seed gives byte-identical canonical report", ok)
    assert ok


SEMEION = DATA_DIR / "semeion.data"
CALTECH = DATA_DIR / "caltech101_silhouettes_28.csv"


@pytest.mark.parametrize("name,path,model,target", [
    ("Semeion", SEMEION, "dbm", 0.19025),
    ("CalTech 101 Silhouettes", CALTECH, "dbn", 0.15554),
])
def test_criterion_9_other_datasets(acceptance_report, name, path, model, target):
    ok = False
    detail = ""
    try:
        if not os.path.exists(path):
            detail = f"{path.name} not present in data/"
            pytest.fail(f"{name} data not available at {path}")
        ds = load_semeion(path) if path == SEMEION else load_csv_binary(path, 28, 28)
        # 10% of the images train, the rest test
        cfg = ExperimentConfig(width=ds.width, height=ds.height, model=model, optimizer="ihs", agents=5, iterations=10,
                               runs=5, train_fraction=0.1, seed=2017)
        mean = run_experiment(cfg, pools=(ds, None)).aggregate["test_mse_mean"]
        ok = abs(mean - target) <= 0.03
        detail = f"mean {mean:.5f}, target {target} +/- 0.03"
    finally:
        acceptance_report(f"9b {name} desk-scale bracket", ok, detail)
    assert ok

import pathlib

import numpy as np
import pytest

from dbmtune.data import load_idx

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"
MNIST_SUBSET = DATA_DIR / "mnist5k-images-idx3-ubyte.gz"

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def mnist():
    if not MNIST_SUBSET.exists():
        pytest.fail(f"missing {MNIST_SUBSET}; run scripts/make_mnist_subset.py")
    return load_idx(MNIST_SUBSET)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion; printed at session end."""
    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

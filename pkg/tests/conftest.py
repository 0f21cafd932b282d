import os
from pathlib import Path

import numpy as np
import pytest

from icbound._accel import HAVE_NUMBA

BACKENDS = ["numpy", "numba"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available backend."""
    monkeypatch.setenv("ICBOUND_BACKEND", request.param)
    return request.param


def _mnist_dir():
    for cand in (os.environ.get("ICBOUND_DATA_DIR"), "/root/data"):
        if cand and (Path(cand) / "mnist").is_dir() or cand and any(Path(cand).glob("train-images*")):
            return cand
    return None


@pytest.fixture(scope="session")
def mnist_dir():
    d = _mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not available (set ICBOUND_DATA_DIR)")
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" | {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n    " + line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

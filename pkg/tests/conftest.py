import itertools
from pathlib import Path

import numpy as np
import pytest

from sparsestyle.fixtures import walk_clip

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def normal_clip():
    return walk_clip("normal", n_frames=90, fps=30.0)


@pytest.fixture(scope="session")
def limp_clip():
    return walk_clip("limp", n_frames=90, fps=30.0, phase=0.7)


def exhaustive_sparse_ls(D, y, k):
    """Best objective over every support of size <= k (independent oracle)."""
    n = D.shape[1]
    best = float(y @ y)
    for size in range(1, min(k, n) + 1):
        for support in itertools.combinations(range(n), size):
            cols = D[:, support]
            coef = np.linalg.lstsq(cols, y, rcond=None)[0]
            r = y - cols @ coef
            best = min(best, float(r @ r))
    return best


def brute_force_dtw(a, b):
    """Minimum squared-difference cost over every monotone path (independent oracle)."""
    n, m = len(a), len(b)
    best = np.inf
    stack = [(0, 0, (a[0] - b[0]) ** 2)]
    while stack:
        i, j, cost = stack.pop()
        if (i, j) == (n - 1, m - 1):
            best = min(best, cost)
            continue
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ii, jj = i + di, j + dj
            if ii < n and jj < m:
                stack.append((ii, jj, cost + (a[ii] - b[jj]) ** 2))
    return best


def planted_instance(seed):
    """X = W* C* with F = 3N = 60, K = 5; each C* row lives on two joints (10% of entries)."""
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((60, 5))
    C = np.zeros((5, 60))
    joints = rng.permutation(20)
    for k in range(5):
        for v in joints[2 * k : 2 * k + 2]:
            C[k, 3 * v : 3 * v + 3] = rng.standard_normal(3)
    return W @ C, W, C


def sparse_code_instance(rng):
    """Random dictionary (<= 8 x 8) and budget k <= 3."""
    n = int(rng.integers(2, 9))
    m = int(rng.integers(2, 9))
    k = int(rng.integers(1, min(3, n) + 1))
    return rng.standard_normal((m, n)), rng.standard_normal(m), k


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_criterion_"
    if marker in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        number = int(report.nodeid.split(marker)[1].split("_")[0])
        if report.when == "call" or number not in _ACCEPTANCE:
            _ACCEPTANCE[number] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict = "PASS" if _ACCEPTANCE[number] == "passed" else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {number} {verdict}")

import os
from pathlib import Path

import numpy as np
import pytest

from rankpref.ratings import RatingScale, SparseRatingMatrix

ROOT = Path(__file__).resolve().parents[1]

ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}" +
                            (f": {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def data_path(env, default):
    return Path(os.environ.get(env, ROOT / default))


def random_connected(rng, n_max=50, fill=(0.3, 0.9), values=None, scale=None, n_min=2):
    """Random sparse matrix whose rating graph is connected with no empty rows/cols."""
    scale = scale or RatingScale(-1e9, 1e9)
    while True:
        n, m = rng.integers(n_min, n_max + 1, size=2)
        mask = rng.random((n, m)) < rng.uniform(*fill)
        if not (mask.any(axis=0).all() and mask.any(axis=1).all()):
            continue
        users, items = np.nonzero(mask)
        if values is None:
            vals = rng.uniform(1, 5, size=len(users))
        else:
            vals = values(len(users))
        mat = SparseRatingMatrix.from_triples(users, items, vals, scale=scale, shape=(n, m))
        from rankpref.ratings import connected_components
        if connected_components(mat).n_components == 1:
            return mat


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Shared fixtures and builders for the test suite."""
import numpy as np
import pytest

from spreadscope.data import Dataset


def month_range(n, start_year=1950):
    year, month = start_year, 1
    out = []
    for _ in range(n):
        out.append(f"{year:04d}-{month:02d}")
        month += 1
        if month == 13:
            month, year = 1, year + 1
    return tuple(out)


def make_dataset(X, y, names=None):
    """Dataset over synthetic monthly dates, for model-level tests."""
    X = np.asarray(X, dtype=np.float64)
    names = tuple(names) if names is not None else tuple(f"f{i}" for i in range(X.shape[1]))
    return Dataset(month_range(len(X)), X, np.asarray(y, dtype=np.int64), names)


def two_gaussians(n, n_features=4, separation=3.0, positive_share=0.5, seed=0):
    """Linearly separable-ish blobs; class 1 shifted along every axis."""
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_share))
    y = np.array([0] * (n - n_pos) + [1] * n_pos)
    X = rng.normal(size=(n, n_features))
    X[y == 1] += separation
    order = rng.permutation(n)
    return X[order], y[order]


@pytest.fixture
def blob_dataset():
    X, y = two_gaussians(200, seed=13)
    return make_dataset(X, y)

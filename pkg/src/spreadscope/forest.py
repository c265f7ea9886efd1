"""Bagged ensemble of Gini trees with per-node feature sampling.

Each tree draws its own bootstrap sample and feature subsets from a child
generator derived from (seed, tree index) by a counter-based scheme, so the
fitted model is identical whether trees are trained serially or in parallel,
and in any execution order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import FitError, PredictError
from .tree import GINI, Tree, TreeParams, fit_tree

__all__ = ["ForestModel", "ForestPrediction", "fit_forest", "predict_forest", "child_rng"]

MEAN = "mean"
VOTE = "vote"


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one ensemble member, stable across run order."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


@dataclass(frozen=True)
class ForestPrediction:
    score: float
    label: int


@dataclass(frozen=True)
class ForestModel:
    """Immutable fitted forest; trees ordered by their bootstrap index."""

    trees: tuple[Tree, ...]
    B: int
    mtry: int
    seed: int
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.trees) != self.B:
            raise FitError("tree count does not match B")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise PredictError(
                f"expected {self.n_features} feature columns, got {X.shape[1] if X.ndim == 2 else 'non-matrix'}"
            )
        return X

    def score_batch(self, X: np.ndarray, aggregation: str = MEAN) -> np.ndarray:
        """Ensemble score per row: mean leaf probability, or vote share."""
        X = self._check(X)
        if aggregation not in (MEAN, VOTE):
            raise PredictError(f"unknown aggregation {aggregation!r}")
        total = np.zeros(len(X))
        for tree in self.trees:
            p = tree.predict_batch(X)
            total += (p >= 0.5).astype(np.float64) if aggregation == VOTE else p
        return total / self.B

    def label_batch(
        self, X: np.ndarray, threshold: float = 0.5, aggregation: str = MEAN
    ) -> np.ndarray:
        return (self.score_batch(X, aggregation) >= threshold).astype(np.int64)


def fit_forest(
    train: Dataset,
    B: int = 500,
    mtry: int = 6,
    params: TreeParams | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> ForestModel:
    """Fit B bootstrap trees; tree i uses the child generator for (seed, i).

    ``bootstrap=False`` trains every tree on all rows with unit weight (a
    test hook; feature sampling still randomizes members). The explicit
    ``mtry`` overrides any value in ``params``.

    Raises:
        FitError: single-class target, empty input, or non-Gini params.
    """
    if B < 1:
        raise FitError("B must be >= 1")
    y = train.target
    if train.n == 0:
        raise FitError("empty training input")
    if len(np.unique(y)) < 2:
        raise FitError("training target has a single class")
    params = params or TreeParams(max_depth=12, min_samples_leaf=5)
    if params.split_criterion != GINI:
        raise FitError("forest trees must use the Gini criterion")
    params = replace(params, mtry=mtry)
    X = train.features
    n = train.n

    def fit_one(i: int) -> Tree:
        rng = child_rng(seed, i)
        if bootstrap:
            draws = rng.integers(0, n, size=n)
            weights = np.bincount(draws, minlength=n).astype(np.float64)
        else:
            weights = np.ones(n)
        return fit_tree(X, y.astype(np.float64), weights, params, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(fit_one, range(B)))
    else:
        trees = tuple(fit_one(i) for i in range(B))
    return ForestModel(
        trees=trees, B=B, mtry=mtry, seed=seed, feature_names=tuple(train.feature_names)
    )


def predict_forest(
    model: ForestModel,
    x: np.ndarray,
    threshold: float = 0.5,
    aggregation: str = MEAN,
) -> ForestPrediction:
    """Score one feature vector and threshold it into a label."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise PredictError("predict_forest takes a single feature vector")
    score = float(model.score_batch(x[None, :], aggregation)[0])
    return ForestPrediction(score=score, label=int(score >= threshold))

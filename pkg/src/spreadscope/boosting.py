"""Gradient boosting with logistic loss.

The reference mode follows the classic functional-gradient recipe: start at
the base-rate log-odds, fit a regression tree to the negative gradient, take
a single global step size from a one-dimensional line search, shrink, add.
Because a zero step is always admissible in the search, training deviance
never increases. A per-leaf Newton mode (second-order leaf weights with a
ridge term) is available behind a flag.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import FitError, PredictError
from .tree import VARIANCE, Tree, TreeParams, fit_tree, with_leaf_values

__all__ = [
    "LOGISTIC_DEVIANCE",
    "Stage",
    "GbmModel",
    "GbmPrediction",
    "TrainTrace",
    "fit_gbm",
    "predict_gbm",
    "sigmoid",
    "mean_deviance",
]

LOGISTIC_DEVIANCE = "LogisticDeviance"

_GOLD = (np.sqrt(5.0) - 1.0) / 2.0


def sigmoid(margin: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function via its tanh identity."""
    return 0.5 * (1.0 + np.tanh(np.asarray(margin, dtype=np.float64) / 2.0))


def mean_deviance(y: np.ndarray, margin: np.ndarray) -> float:
    """Mean of log(1 + e^f) - y f, the negative Bernoulli log-likelihood."""
    margin = np.asarray(margin, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


@dataclass(frozen=True)
class Stage:
    rho: float
    tree: Tree


@dataclass(frozen=True)
class GbmPrediction:
    margin: float
    score: float
    label: int


@dataclass(frozen=True)
class TrainTrace:
    """Training deviance after the initial guess and after each stage."""

    deviance: np.ndarray  # length M + 1

    def __post_init__(self) -> None:
        dev = np.asarray(self.deviance, dtype=np.float64)
        dev.flags.writeable = False
        object.__setattr__(self, "deviance", dev)

    def to_csv(self) -> str:
        out = ["iteration,deviance"]
        for i, d in enumerate(self.deviance):
            out.append(f"{i},{float(d)!r}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class GbmModel:
    """Additive model: margin(x) = f0 + sum over stages of nu * rho_t * tree_t(x)."""

    f0: float
    nu: float
    stages: tuple[Stage, ...]
    seed: int
    feature_names: tuple[str, ...]
    loss: str = LOGISTIC_DEVIANCE

    @property
    def M(self) -> int:
        return len(self.stages)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise PredictError(f"expected {self.n_features} feature columns")
        return X

    def margin_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        margin = np.full(len(X), self.f0)
        for stage in self.stages:
            margin += self.nu * stage.rho * stage.tree.predict_batch(X)
        return margin

    def score_batch(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin_batch(X))

    def label_batch(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.score_batch(X) >= threshold).astype(np.int64)


def _line_search(objective, lo: float = 0.0, hi: float = 8.0, tol: float = 1e-6) -> float:
    """Golden-section minimizer that returns the best point it evaluated.

    The objective here is convex in the step size, so the bracket converges
    to the minimum; returning the best evaluated point (the endpoints
    included) additionally guarantees the result is never worse than lo = 0.
    """
    a, b = lo, hi
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = objective(c), objective(d)
    evaluated = [(objective(lo), lo), (objective(hi), hi), (fc, c), (fd, d)]
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = objective(c)
            evaluated.append((fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = objective(d)
            evaluated.append((fd, d))
    return min(evaluated)[1]


def fit_gbm(
    train: Dataset,
    M: int = 300,
    nu: float = 0.1,
    params: TreeParams | None = None,
    seed: int = 0,
    per_leaf_newton: bool = False,
    ridge: float = 1.0,
) -> tuple[GbmModel, TrainTrace]:
    """Fit M boosting stages on the logistic deviance.

    Each stage fits a variance-criterion tree to the current negative
    gradient y - sigma(margin), then either line-searches one global step
    size on [0, 8] (default) or, with ``per_leaf_newton``, replaces each
    leaf with sum(g) / (sum(sigma(1-sigma)) + ridge) and steps with rho = 1.

    Raises:
        FitError: single-class target, M < 1, nu outside (0, 1], or a
            non-finite deviance (named by iteration).
    """
    if M < 1:
        raise FitError("M must be >= 1")
    if not 0.0 < nu <= 1.0:
        raise FitError("nu must lie in (0, 1]")
    y = train.target.astype(np.float64)
    if train.n == 0 or len(np.unique(y)) < 2:
        raise FitError("training target has a single class")
    params = params or TreeParams(max_depth=6, min_samples_leaf=5, split_criterion=VARIANCE)
    if params.split_criterion != VARIANCE:
        raise FitError("boosting trees must use the variance criterion")
    X = train.features
    base_rate = float(y.mean())
    f0 = float(np.log(base_rate / (1.0 - base_rate)))
    margin = np.full(train.n, f0)
    trace = [mean_deviance(y, margin)]
    rng = np.random.default_rng(seed)
    stages: list[Stage] = []
    for t in range(M):
        p = sigmoid(margin)
        gradient = y - p
        tree = fit_tree(X, gradient, None, params, rng)
        if per_leaf_newton:
            hessian = p * (1.0 - p)
            leaf_of = tree.apply(X)
            updates = {}
            for leaf in tree.leaves():
                rows = leaf_of == leaf
                updates[int(leaf)] = float(
                    gradient[rows].sum() / (hessian[rows].sum() + ridge)
                )
            tree = with_leaf_values(tree, updates)
            rho = 1.0
            h = tree.predict_batch(X)
        else:
            h = tree.predict_batch(X)

            def objective(step: float) -> float:
                return mean_deviance(y, margin + step * h)

            rho = _line_search(objective)
        margin = margin + nu * rho * h
        dev = mean_deviance(y, margin)
        if not np.isfinite(dev):
            raise FitError(f"non-finite deviance at iteration {t + 1}")
        trace.append(dev)
        stages.append(Stage(rho=float(rho), tree=tree))
    model = GbmModel(
        f0=f0,
        nu=nu,
        stages=tuple(stages),
        seed=seed,
        feature_names=tuple(train.feature_names),
    )
    return model, TrainTrace(np.array(trace))


def predict_gbm(model: GbmModel, x: np.ndarray, threshold: float = 0.5) -> GbmPrediction:
    """Margin, probability, and label for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise PredictError("predict_gbm takes a single feature vector")
    margin = float(model.margin_batch(x[None, :])[0])
    score = float(sigmoid(np.array(margin)))
    return GbmPrediction(margin=margin, score=score, label=int(score >= threshold))

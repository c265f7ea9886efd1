"""Binary CART learner shared by both ensembles.

One implementation serves two roles: classification splits (weighted Gini)
for the forest and regression splits (variance reduction) fitting gradients
for boosting. Thresholds are midpoints between consecutive distinct sorted
values; routing is fixed as value <= threshold goes left. Criterion ties
break toward the lower feature index, then the lower threshold, so a fit is
reproducible from (data, params, seed) alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, PredictError

__all__ = [
    "GINI",
    "VARIANCE",
    "TreeParams",
    "Tree",
    "fit_tree",
    "predict_tree",
    "with_leaf_values",
]

GINI = "gini"
VARIANCE = "variance"
_CRITERIA = (GINI, VARIANCE)

# Improvements at or below this are treated as zero (float noise on
# near-constant columns), not as a reason to split.
_IMPROVEMENT_EPS = 1e-12

_LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    """Growth limits and split policy for one tree."""

    max_depth: int = 12
    min_samples_leaf: int = 5
    mtry: int | None = None  # features sampled per node; None or >= n_features scans all
    split_criterion: str = GINI

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise FitError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise FitError("min_samples_leaf must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise FitError("mtry must be >= 1")
        if self.split_criterion not in _CRITERIA:
            raise FitError(f"unknown split criterion {self.split_criterion!r}")


@dataclass(frozen=True)
class Tree:
    """Fitted tree as parallel node arrays indexed by preorder node id.

    Leaves carry feature = -1 and child ids -1. ``value`` holds the leaf
    prediction, and for internal nodes the same aggregate computed over all
    training rows passing through (handy for expectations; not a routing
    input). ``n_train`` is the weighted training count per node; with
    bootstrap count-weights this is the number of sampled rows.
    """

    feature: np.ndarray  # int32; -1 at leaves
    threshold: np.ndarray  # float64; nan at leaves
    left: np.ndarray  # int32; -1 at leaves
    right: np.ndarray  # int32; -1 at leaves
    value: np.ndarray  # float64
    n_train: np.ndarray  # float64, integral under count weights
    class_counts: np.ndarray | None  # [n_nodes, 2] weighted (neg, pos); Gini only
    params: TreeParams
    n_features: int

    def __post_init__(self) -> None:
        for name in ("feature", "threshold", "left", "right", "value", "n_train"):
            getattr(self, name).flags.writeable = False
        if self.class_counts is not None:
            self.class_counts.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == _LEAF

    def leaves(self) -> np.ndarray:
        """Leaf ids in preorder (ascending, since ids are assigned preorder)."""
        return np.flatnonzero(self.feature == _LEAF)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def depth(self) -> int:
        return int(self.node_depths().max())

    def node_depths(self) -> np.ndarray:
        depths = np.zeros(self.n_nodes, dtype=np.int32)
        for node in range(self.n_nodes):
            if not self.is_leaf(node):
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return depths

    def parents(self) -> np.ndarray:
        parent = np.full(self.n_nodes, -1, dtype=np.int32)
        for node in range(self.n_nodes):
            if not self.is_leaf(node):
                parent[self.left[node]] = node
                parent[self.right[node]] = node
        return parent

    def path_to(self, leaf: int) -> list[tuple[int, float, bool]]:
        """Root-to-leaf conditions as (feature, threshold, went_left)."""
        parent = self.parents()
        steps = []
        node = leaf
        while parent[node] != -1:
            p = int(parent[node])
            steps.append((int(self.feature[p]), float(self.threshold[p]), self.left[p] == node))
            node = p
        steps.reverse()
        return steps

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row."""
        X = _check_matrix(X, self.n_features)
        nodes = np.zeros(len(X), dtype=np.int32)
        while True:
            internal = self.feature[nodes] != _LEAF
            if not internal.any():
                return nodes
            idx = np.flatnonzero(internal)
            at = nodes[idx]
            go_left = X[idx, self.feature[at]] <= self.threshold[at]
            nodes[idx] = np.where(go_left, self.left[at], self.right[at])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict_one(self, x: np.ndarray) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=np.float64)[None, :])[0])


def _check_matrix(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < n_features:
        raise PredictError(f"need at least {n_features} feature columns")
    if not np.all(np.isfinite(X)):
        raise PredictError("non-finite feature value")
    return X


def predict_tree(tree: Tree, x: np.ndarray) -> float:
    """Route one feature vector to a leaf and return its prediction."""
    return tree.predict_one(x)


def with_leaf_values(tree: Tree, leaf_values: dict[int, float]) -> Tree:
    """Copy of ``tree`` with the given leaves repredicted.

    Internal aggregates are recomputed bottom-up as cover-weighted child
    means; preorder ids guarantee children come after parents, so a single
    reverse pass suffices.
    """
    value = np.array(tree.value)
    for leaf, v in leaf_values.items():
        if not tree.is_leaf(leaf):
            raise FitError(f"node {leaf} is not a leaf")
        value[leaf] = v
    for node in range(tree.n_nodes - 1, -1, -1):
        if not tree.is_leaf(node):
            l, r = tree.left[node], tree.right[node]
            weighted = value[l] * tree.n_train[l] + value[r] * tree.n_train[r]
            value[node] = weighted / tree.n_train[node]
    return Tree(
        feature=tree.feature,
        threshold=tree.threshold,
        left=tree.left,
        right=tree.right,
        value=value,
        n_train=tree.n_train,
        class_counts=tree.class_counts,
        params=tree.params,
        n_features=tree.n_features,
    )


def _scan_column(xcol, y, w, min_leaf, criterion):
    """Best boundary for one feature; returns (improvement, threshold) or None.

    Vectorized over all candidate boundaries: cumulative weights and weighted
    targets under an ascending stable sort give every left/right statistic in
    one pass. Ties in improvement keep the lowest threshold (first argmax).
    """
    order = np.argsort(xcol, kind="stable")
    xs = xcol[order]
    ys = y[order]
    ws = w[order]
    boundaries = np.flatnonzero(xs[1:] > xs[:-1])
    if boundaries.size == 0:
        return None
    cw = np.cumsum(ws)
    cwy = np.cumsum(ws * ys)
    # Totals summed in original row order: shared by every feature scanned at
    # this node, unlike the sorted-order cumsum totals.
    W = w.sum()
    S = (w * y).sum()
    w_left = cw[boundaries]
    w_right = W - w_left
    valid = (w_left >= min_leaf) & (w_right >= min_leaf)
    if not valid.any():
        return None
    s_left = cwy[boundaries]
    s_right = S - s_left
    if criterion == GINI:
        # Negated weighted child Gini, up to the shared parent constant:
        # sum of (w1^2 + w0^2)/W per side.
        score = (s_left**2 + (w_left - s_left) ** 2) / w_left
        score += (s_right**2 + (w_right - s_right) ** 2) / w_right
        parent = (S**2 + (W - S) ** 2) / W
    else:
        # SSE reduction, up to the shared sum of squares.
        score = s_left**2 / w_left + s_right**2 / w_right
        parent = S**2 / W
    score[~valid] = -np.inf
    best = int(np.argmax(score))
    if not np.isfinite(score[best]):
        return None
    b = boundaries[best]
    threshold = (xs[b] + xs[b + 1]) / 2.0
    # Recompute the winner's improvement with both sides summed directly in
    # original row order. Cumsum accumulation order differs per feature, so
    # two features inducing the same partition (an exact criterion tie, e.g.
    # both isolating the same extreme row) would otherwise get different
    # float scores and defeat the lower-feature tie-break.
    go_left = xcol <= threshold

    def side(mask):
        return w[mask].sum(), (w[mask] * y[mask]).sum()

    def cost(wside, sside):
        if criterion == GINI:
            return (sside**2 + (wside - sside) ** 2) / wside
        return sside**2 / wside

    canonical = cost(*side(go_left)) + cost(*side(~go_left))
    return float(canonical - parent), float(threshold)


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray | None = None,
    params: TreeParams | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a tree greedily top-down.

    Each node draws ``mtry`` candidate features without replacement, scores
    every midpoint threshold of each, and keeps the best strict improvement.
    Growth stops at max_depth, when a child would fall under
    min_samples_leaf (weighted), or when no split improves the criterion.
    Rows with zero weight take no part in the fit.

    Raises:
        FitError: empty input, shape mismatch, or invalid weights.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise FitError("empty training input")
    n, p = X.shape
    if y.shape != (n,):
        raise FitError("y length does not match X")
    if weights is None:
        weights = np.ones(n)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n,):
        raise FitError("weights length does not match X")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise FitError("weights must be nonnegative with positive sum")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise FitError("non-finite training value")
    params = params or TreeParams()
    if params.split_criterion == GINI and not np.all((y == 0) | (y == 1)):
        raise FitError("Gini criterion needs a {0, 1} target")
    rng = rng or np.random.default_rng()
    mtry = params.mtry if params.mtry is not None else p
    mtry = min(mtry, p)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_train: list[float] = []
    counts: list[tuple[float, float]] = []

    def new_node(rows: np.ndarray) -> int:
        nid = len(feature)
        w = weights[rows]
        W = w.sum()
        s = float((w * y[rows]).sum())
        feature.append(_LEAF)
        threshold.append(np.nan)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(s / W)
        n_train.append(float(W))
        counts.append((float(W - s), s))
        return nid

    def is_pure(rows: np.ndarray) -> bool:
        yy = y[rows]
        return bool(np.all(yy == yy[0]))

    def build(rows: np.ndarray, depth: int) -> int:
        nid = new_node(rows)
        W = n_train[nid]
        if depth >= params.max_depth or W < 2 * params.min_samples_leaf or is_pure(rows):
            return nid
        if mtry < p:
            candidates = np.sort(rng.choice(p, size=mtry, replace=False))
        else:
            candidates = np.arange(p)
        best = None  # (improvement, feature, threshold)
        yy = y[rows]
        ww = weights[rows]
        for f in candidates:
            found = _scan_column(
                X[rows, f], yy, ww, params.min_samples_leaf, params.split_criterion
            )
            if found is None:
                continue
            improvement, thr = found
            if best is None or improvement > best[0]:
                best = (improvement, int(f), thr)
        if best is None or best[0] <= _IMPROVEMENT_EPS:
            return nid
        _, f, thr = best
        go_left = X[rows, f] <= thr
        feature[nid] = f
        threshold[nid] = thr
        left[nid] = build(rows[go_left], depth + 1)
        right[nid] = build(rows[~go_left], depth + 1)
        return nid

    build(np.flatnonzero(weights > 0), 0)
    class_counts = (
        np.array(counts, dtype=np.float64) if params.split_criterion == GINI else None
    )
    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        n_train=np.array(n_train, dtype=np.float64),
        class_counts=class_counts,
        params=params,
        n_features=p,
    )

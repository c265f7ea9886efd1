"""Exact per-tree Shapley attribution and its reporting surfaces.

The value function is the cover-weighted conditional expectation of a tree:
marginalized features descend both children weighted by training counts,
fixed features follow the instance. Two engines compute the same numbers:
a polynomial path-walk (default, linear in leaves) and literal subset
enumeration over each tree's used features (exponential; capped). Boosting
attributions live in margin space scaled by nu * rho_t; forest attributions
average per-tree probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boosting import GbmModel
from .data import CorrMatrix, Dataset
from .errors import ExplainError
from .forest import ForestModel
from .tree import Tree

__all__ = [
    "ShapMatrix",
    "ImportanceRanking",
    "DependencePoints",
    "SummaryPoints",
    "shap_values",
    "importance",
    "dependence",
    "contribution_summary",
    "loess_smooth",
    "MARGIN",
    "PROBABILITY",
]

MARGIN = "margin"
PROBABILITY = "probability"

PATH = "path"
ENUMERATE = "enumerate"


@dataclass(frozen=True)
class ShapMatrix:
    """Per-instance, per-feature attributions plus the shared base value.

    Local accuracy: base_value + row sum = model output at that instance
    (margin for boosting, mean probability for the forest).
    """

    values: np.ndarray  # [n, p]
    base_value: float
    instance_dates: tuple[str, ...]
    feature_names: tuple[str, ...]
    unit: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def to_csv_long(self) -> str:
        out = ["date,feature,value"]
        for i, date in enumerate(self.instance_dates):
            for j, name in enumerate(self.feature_names):
                out.append(f"{date},{name},{float(self.values[i, j])!r}")
        return "\n".join(out) + "\n"

    def to_csv_wide(self) -> str:
        out = ["date," + ",".join(self.feature_names)]
        for i, date in enumerate(self.instance_dates):
            out.append(date + "," + ",".join(repr(float(v)) for v in self.values[i]))
        return "\n".join(out) + "\n"


def _node_covers(tree: Tree, background: Dataset | None) -> np.ndarray:
    """Per-node weights for marginalization: stored training counts, or the
    routing counts of an explicit background sample."""
    if background is None:
        return tree.n_train
    counts = np.zeros(tree.n_nodes)
    nodes = np.zeros(background.n, dtype=np.int64)
    X = background.features
    counts[0] = background.n
    while True:
        internal = tree.feature[nodes] != -1
        if not internal.any():
            break
        idx = np.flatnonzero(internal)
        at = nodes[idx]
        go_left = X[idx, tree.feature[at]] <= tree.threshold[at]
        nodes[idx] = np.where(go_left, tree.left[at], tree.right[at])
        np.add.at(counts, nodes[idx], 1.0)
    empty = [
        int(n)
        for n in range(tree.n_nodes)
        if counts[n] == 0
    ]
    if empty:
        raise ExplainError(
            f"background sample reaches no rows at node {empty[0]}; use a larger background"
        )
    return counts


def _tree_expectation(tree: Tree, covers: np.ndarray) -> float:
    """Cover-weighted mean output, i.e. the empty-subset value function."""

    def rec(node: int) -> float:
        if tree.is_leaf(node):
            return float(tree.value[node])
        l, r = int(tree.left[node]), int(tree.right[node])
        cl, cr = covers[l], covers[r]
        return (cl * rec(l) + cr * rec(r)) / (cl + cr)

    return rec(0)


def _expectation_given(tree: Tree, x: np.ndarray, fixed: frozenset, covers: np.ndarray) -> float:
    """Conditional expectation: follow x on fixed features, marginalize the rest."""

    def rec(node: int) -> float:
        if tree.is_leaf(node):
            return float(tree.value[node])
        f = int(tree.feature[node])
        l, r = int(tree.left[node]), int(tree.right[node])
        if f in fixed:
            return rec(l) if x[f] <= tree.threshold[node] else rec(r)
        cl, cr = covers[l], covers[r]
        return (cl * rec(l) + cr * rec(r)) / (cl + cr)

    return rec(0)


def _tree_shap_path(tree: Tree, x: np.ndarray, covers: np.ndarray, phi: np.ndarray) -> None:
    """Polynomial-time exact attribution for one tree, accumulated into phi.

    Walks every root-to-leaf path once, maintaining for the features on the
    path the proportion of subsets that flow through (cover fractions) and
    whether x itself follows. The bookkeeping mirrors the published
    path-dependent algorithm; weights are per-subset-size polynomial
    coefficients, extended at every split and unwound to read out each
    feature's marginal contribution at the leaves.
    """

    def extend(d, z, o, w, pd, pz, po):
        l = len(w)
        d = d + [pd]
        z = z + [pz]
        o = o + [po]
        w = w + [1.0 if l == 0 else 0.0]
        for i in range(l - 1, -1, -1):
            w[i + 1] += po * w[i] * (i + 1) / (l + 1)
            w[i] = pz * w[i] * (l - i) / (l + 1)
        return d, z, o, w

    def unwind(d, z, o, w, i):
        L = len(w)
        one, zero = o[i], z[i]
        w = w[:]
        n = w[L - 1]
        for j in range(L - 2, -1, -1):
            if one != 0.0:
                t = w[j]
                w[j] = n * L / ((j + 1) * one)
                n = t - w[j] * zero * (L - 1 - j) / L
            else:
                w[j] = w[j] * L / (zero * (L - 1 - j))
        return d[:i] + d[i + 1 :], z[:i] + z[i + 1 :], o[:i] + o[i + 1 :], w[:-1]

    def unwound_sum(z, o, w, i):
        L = len(w)
        one, zero = o[i], z[i]
        total = 0.0
        if one != 0.0:
            n = w[L - 1]
            for j in range(L - 2, -1, -1):
                t = n * L / ((j + 1) * one)
                total += t
                n = w[j] - t * zero * (L - 1 - j) / L
        else:
            for j in range(L - 2, -1, -1):
                total += w[j] * L / (zero * (L - 1 - j))
        return total

    def recurse(node, d, z, o, w, pz, po, pd):
        d, z, o, w = extend(d, z, o, w, pd, pz, po)
        if tree.is_leaf(node):
            leaf_value = float(tree.value[node])
            for i in range(1, len(w)):
                phi[d[i]] += unwound_sum(z, o, w, i) * (o[i] - z[i]) * leaf_value
            return
        f = int(tree.feature[node])
        l, r = int(tree.left[node]), int(tree.right[node])
        hot, cold = (l, r) if x[f] <= tree.threshold[node] else (r, l)
        iz, io = 1.0, 1.0
        for k in range(len(d)):
            if d[k] == f:
                iz, io = z[k], o[k]
                d, z, o, w = unwind(d, z, o, w, k)
                break
        total = covers[l] + covers[r]
        recurse(hot, d, z, o, w, iz * covers[hot] / total, io, f)
        recurse(cold, d, z, o, w, iz * covers[cold] / total, 0.0, f)

    recurse(0, [], [], [], [], 1.0, 1.0, -1)


def _tree_shap_enumerate(
    tree: Tree, x: np.ndarray, covers: np.ndarray, cap: int, phi: np.ndarray
) -> None:
    """Literal subset enumeration over the tree's used features.

    Exponential in the number of distinct features the tree references;
    refuses beyond ``cap`` of them.
    """
    used = sorted({int(f) for f in tree.feature if f != -1})
    m = len(used)
    if m == 0:
        return
    if m > cap:
        raise ExplainError(
            f"tree uses {m} distinct features, beyond the enumeration cap of "
            f"{cap}; grow smaller trees or use the path engine"
        )
    # f_S for every subset of used features, keyed by bitmask.
    values = np.empty(1 << m)
    for mask in range(1 << m):
        fixed = frozenset(used[j] for j in range(m) if mask >> j & 1)
        values[mask] = _expectation_given(tree, x, fixed, covers)
    fact = [math.factorial(k) for k in range(m + 1)]
    for j in range(m):
        bit = 1 << j
        for mask in range(1 << m):
            if mask & bit:
                continue
            size = bin(mask).count("1")
            weight = fact[size] * fact[m - size - 1] / fact[m]
            phi[used[j]] += weight * (values[mask | bit] - values[mask])


def _stages(model) -> list[tuple[float, Tree]]:
    """(output scale, tree) pairs whose weighted sum plus base is the model."""
    if isinstance(model, GbmModel):
        return [(model.nu * stage.rho, stage.tree) for stage in model.stages]
    if isinstance(model, ForestModel):
        return [(1.0 / model.B, tree) for tree in model.trees]
    raise ExplainError(f"cannot explain model of type {type(model).__name__}")


def shap_values(
    model,
    X,
    background: Dataset | None = None,
    method: str = PATH,
    enumeration_cap: int = 20,
) -> ShapMatrix:
    """Exact attributions for every row of X under the given model.

    Margin units for boosting (base_value includes f0), probability units
    for the forest. ``background=None`` marginalizes with the training
    cover counts stored in the trees; passing a Dataset recomputes covers
    by routing its rows.

    Raises:
        ExplainError: unknown engine or model type, non-finite input, a
            background that leaves some node empty, or (enumerate engine) a
            tree using more distinct features than ``enumeration_cap``.
    """
    if method not in (PATH, ENUMERATE):
        raise ExplainError(f"unknown attribution engine {method!r}")
    if not isinstance(model, (GbmModel, ForestModel)):
        raise ExplainError(f"cannot explain model of type {type(model).__name__}")
    if isinstance(X, Dataset):
        dates = X.dates
        X = X.features
    else:
        X = np.asarray(X, dtype=np.float64)
        dates = tuple(str(i) for i in range(len(X)))
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ExplainError(f"expected {model.n_features} feature columns")
    if not np.all(np.isfinite(X)):
        raise ExplainError("non-finite feature value")
    if background is not None and background.n == 0:
        raise ExplainError("background must be nonempty")
    scaled = _stages(model)
    p = model.n_features
    n = len(X)
    values = np.zeros((n, p))
    base = float(model.f0) if isinstance(model, GbmModel) else 0.0
    phi_tree = np.empty(p)
    for scale, tree in scaled:
        covers = _node_covers(tree, background)
        base += scale * _tree_expectation(tree, covers)
        for i in range(n):
            phi_tree[:] = 0.0
            if method == PATH:
                _tree_shap_path(tree, X[i], covers, phi_tree)
            else:
                _tree_shap_enumerate(tree, X[i], covers, enumeration_cap, phi_tree)
            values[i] += scale * phi_tree
    unit = MARGIN if isinstance(model, GbmModel) else PROBABILITY
    return ShapMatrix(
        values=values,
        base_value=base,
        instance_dates=tuple(dates),
        feature_names=tuple(model.feature_names),
        unit=unit,
    )


@dataclass(frozen=True)
class ImportanceRanking:
    """Features sorted by mean absolute attribution, rank 1 first."""

    names: tuple[str, ...]
    mean_abs: np.ndarray

    def rank_of(self, name: str) -> int:
        return self.names.index(name) + 1

    def top(self, k: int) -> tuple[str, ...]:
        return self.names[:k]

    def to_csv(self) -> str:
        out = ["rank,feature,mean_abs_shap"]
        for i, name in enumerate(self.names, start=1):
            out.append(f"{i},{name},{float(self.mean_abs[i - 1])!r}")
        return "\n".join(out) + "\n"


def importance(shap: ShapMatrix) -> ImportanceRanking:
    """Mean |phi| per feature, descending; exact ties fall back to name order."""
    if shap.n == 0:
        raise ExplainError("empty attribution matrix")
    mean_abs = np.abs(shap.values).mean(axis=0)
    order = sorted(
        range(len(shap.feature_names)),
        key=lambda j: (-mean_abs[j], shap.feature_names[j]),
    )
    return ImportanceRanking(
        names=tuple(shap.feature_names[j] for j in order),
        mean_abs=mean_abs[order],
    )


def loess_smooth(
    x: np.ndarray, y: np.ndarray, span: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Locally weighted linear smoother with tricube weights.

    Returns the points sorted by x and the smoothed value at each.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    k = min(n, max(2, int(np.ceil(span * n))))
    out = np.empty(n)
    for i in range(n):
        d = np.abs(xs - xs[i])
        near = np.argpartition(d, k - 1)[:k]
        dmax = d[near].max()
        if dmax == 0:
            w = np.ones(k)
        else:
            w = (1.0 - (d[near] / dmax) ** 3) ** 3
        W = w.sum()
        if W == 0:
            out[i] = ys[near].mean()
            continue
        xm = (w * xs[near]).sum() / W
        ym = (w * ys[near]).sum() / W
        sxx = (w * (xs[near] - xm) ** 2).sum()
        if sxx < 1e-12:
            out[i] = ym
        else:
            slope = (w * (xs[near] - xm) * (ys[near] - ym)).sum() / sxx
            out[i] = ym + slope * (xs[i] - xm)
    return xs, out


@dataclass(frozen=True)
class DependencePoints:
    """The (feature value, attribution) cloud for one feature, with its
    most negatively correlated partner's values and a smoothing polyline."""

    feature: str
    x: np.ndarray
    phi: np.ndarray
    partner: str
    partner_values: np.ndarray
    smooth_x: np.ndarray
    smooth_phi: np.ndarray

    def to_csv(self) -> str:
        out = [f"# feature={self.feature} partner={self.partner}", "x,phi,partner_value"]
        for xi, pi, ci in zip(self.x, self.phi, self.partner_values):
            out.append(f"{float(xi)!r},{float(pi)!r},{float(ci)!r}")
        return "\n".join(out) + "\n"


def dependence(
    shap: ShapMatrix, ds: Dataset, feature: str, corr: CorrMatrix, span: float = 0.5
) -> DependencePoints:
    """Dependence-plot point set for one feature."""
    if feature not in shap.feature_names:
        raise ExplainError(f"unknown feature {feature!r}")
    x = ds.column(feature)
    phi = shap.column(feature)
    partner, _ = corr.most_correlated(feature)
    sx, sphi = loess_smooth(x, phi, span=span)
    return DependencePoints(
        feature=feature,
        x=x,
        phi=phi,
        partner=partner,
        partner_values=ds.column(partner),
        smooth_x=sx,
        smooth_phi=sphi,
    )


@dataclass(frozen=True)
class SummaryPoints:
    """Beeswarm-style data: per feature (importance order), each instance's
    attribution paired with the feature value's within-column quantile."""

    features: tuple[str, ...]
    phi: tuple[np.ndarray, ...]  # aligned with features
    quantile: tuple[np.ndarray, ...]

    def to_csv(self) -> str:
        out = ["feature,phi,quantile"]
        for name, phis, qs in zip(self.features, self.phi, self.quantile):
            for p, q in zip(phis, qs):
                out.append(f"{name},{float(p)!r},{float(q)!r}")
        return "\n".join(out) + "\n"


def _rank_quantiles(column: np.ndarray) -> np.ndarray:
    n = len(column)
    if n == 1:
        return np.zeros(1)
    uniques, inverse = np.unique(column, return_inverse=True)
    order = np.argsort(column, kind="stable")
    position = np.empty(n)
    position[order] = np.arange(n)
    # Average position within each tie group.
    sums = np.bincount(inverse, weights=position)
    counts = np.bincount(inverse)
    return (sums / counts)[inverse] / (n - 1)


def contribution_summary(shap: ShapMatrix, ds: Dataset) -> SummaryPoints:
    """Attributions with value quantiles, features ordered by importance."""
    if shap.n == 0:
        raise ExplainError("empty attribution matrix")
    ranking = importance(shap)
    phis = []
    quantiles = []
    for name in ranking.names:
        phis.append(shap.column(name))
        quantiles.append(_rank_quantiles(ds.column(name)))
    return SummaryPoints(
        features=ranking.names, phi=tuple(phis), quantile=tuple(quantiles)
    )

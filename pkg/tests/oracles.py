"""Brute-force reference implementations shared across test modules.

Everything here favors literal definitions over speed: explicit loops,
textbook formulas, no shortcuts shared with the library code.
"""
import itertools
import math

import numpy as np


def gini_impurity(y, w):
    """1 - sum of squared weighted class shares."""
    W = float(np.sum(w))
    w1 = float(np.sum(np.asarray(w) * np.asarray(y)))
    w0 = W - w1
    return 1.0 - (w0 / W) ** 2 - (w1 / W) ** 2


def weighted_sse(y, w):
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    mean = float((w * y).sum() / w.sum())
    return float((w * (y - mean) ** 2).sum())


def best_split_exhaustive(X, y, w, criterion, min_leaf):
    """Try every (feature, midpoint) pair; return (improvement, feature, threshold).

    Improvement is the weighted parent criterion minus the weighted children
    sum. Ties keep the lowest feature index, then the lowest threshold.
    Returns None when no admissible split exists.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, p = X.shape

    def node_cost(rows):
        if criterion == "gini":
            return float(np.sum(w[rows])) * gini_impurity(y[rows], w[rows])
        return weighted_sse(y[rows], w[rows])

    all_rows = np.arange(n)
    parent = node_cost(all_rows)
    best = None
    for f in range(p):
        values = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = all_rows[X[:, f] <= thr]
            right = all_rows[X[:, f] > thr]
            if w[left].sum() < min_leaf or w[right].sum() < min_leaf:
                continue
            improvement = parent - node_cost(left) - node_cost(right)
            if best is None or improvement > best[0]:
                best = (improvement, f, thr)
    return best


def route_oracle(tree, x):
    """Follow the tree from the root, re-evaluating every condition."""
    node = 0
    while not tree.is_leaf(node):
        f = int(tree.feature[node])
        if x[f] <= tree.threshold[node]:
            node = int(tree.left[node])
        else:
            node = int(tree.right[node])
    return float(tree.value[node])


def logistic(z):
    return 1.0 / (1.0 + math.exp(-z))


def bernoulli_deviance(y, margins):
    """Mean of log(1 + e^f) - y f, summed the slow way."""
    total = 0.0
    for yi, fi in zip(y, margins):
        total += math.log1p(math.exp(-abs(fi))) + max(fi, 0.0) - yi * fi
    return total / len(y)


def shap_exact(value_fn, players):
    """Factorial-weighted Shapley values over the given player set.

    value_fn(frozenset) is the coalition value. The classic definition,
    enumerated over all subsets; exponential, tests only. Features outside
    ``players`` implicitly get 0 (null players leave the others unchanged).
    """
    players = list(players)
    m = len(players)
    fact = math.factorial
    phi = {j: 0.0 for j in players}
    for i in players:
        rest = [j for j in players if j != i]
        for size in range(m):
            for subset in itertools.combinations(rest, size):
                weight = fact(size) * fact(m - size - 1) / fact(m)
                with_i = value_fn(frozenset(subset) | {i})
                without = value_fn(frozenset(subset))
                phi[i] += weight * (with_i - without)
    return phi


def cover_expectation(tree, x, fixed, covers):
    """Conditional expectation of a tree under cover-weighted marginalization.

    Implemented as an explicit sum over leaves: each leaf contributes its
    value times the product, along its path, of either an indicator (fixed
    feature: does x satisfy the condition) or the cover fraction.
    """
    total = 0.0
    for leaf in tree.leaves():
        weight = 1.0
        node = int(leaf)
        parent = tree.parents()
        while parent[node] != -1:
            p = int(parent[node])
            f = int(tree.feature[p])
            went_left = int(tree.left[p]) == node
            if f in fixed:
                follows = x[f] <= tree.threshold[p]
                if follows != went_left:
                    weight = 0.0
                    break
            else:
                share = covers[node] / (covers[tree.left[p]] + covers[tree.right[p]])
                weight *= share
            node = p
        total += weight * float(tree.value[leaf])
    return total

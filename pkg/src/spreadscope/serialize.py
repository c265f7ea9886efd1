"""Model persistence as explicit JSON envelopes.

Trees serialize to a flat node array; forests and boosting models wrap the
arrays in envelopes carrying their hyperparameters and feature names. Writes
are deterministic (fixed key order, shortest round-trip float text), so
identical models produce identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .boosting import LOGISTIC_DEVIANCE, GbmModel, Stage
from .errors import ModelIOError
from .forest import ForestModel
from .tree import GINI, VARIANCE, Tree, TreeParams

_LEAF = -1


def tree_to_nodes(tree: Tree) -> list[dict]:
    """One dict per node in preorder id order; leaves carry null structure."""
    nodes = []
    for i in range(tree.n_nodes):
        leaf = tree.is_leaf(i)
        nodes.append(
            {
                "id": i,
                "kind": "leaf" if leaf else "split",
                "feature": None if leaf else int(tree.feature[i]),
                "threshold": None if leaf else float(tree.threshold[i]),
                "left": None if leaf else int(tree.left[i]),
                "right": None if leaf else int(tree.right[i]),
                "prediction": float(tree.value[i]),
                "n_train": float(tree.n_train[i]),
            }
        )
    return nodes


def tree_from_nodes(nodes: list[dict], params: TreeParams, n_features: int) -> Tree:
    """Rebuild a tree, validating ids, children, and feature indices.

    Raises:
        ModelIOError: malformed node array.
    """
    n = len(nodes)
    if n == 0:
        raise ModelIOError("tree has no nodes")
    feature = np.full(n, _LEAF, dtype=np.int32)
    threshold = np.full(n, np.nan)
    left = np.full(n, _LEAF, dtype=np.int32)
    right = np.full(n, _LEAF, dtype=np.int32)
    value = np.zeros(n)
    n_train = np.zeros(n)
    for i, node in enumerate(nodes):
        if node.get("id") != i:
            raise ModelIOError(f"node ids must be 0..{n - 1} in order")
        kind = node.get("kind")
        if kind not in ("split", "leaf"):
            raise ModelIOError(f"unknown node kind {kind!r}")
        value[i] = float(node["prediction"])
        n_train[i] = float(node["n_train"])
        if kind == "leaf":
            continue
        f, l, r = node["feature"], node["left"], node["right"]
        if not (isinstance(f, int) and 0 <= f < n_features):
            raise ModelIOError(f"node {i}: feature index {f!r} out of range")
        for child in (l, r):
            if not (isinstance(child, int) and i < child < n):
                raise ModelIOError(f"node {i}: child id {child!r} invalid")
        feature[i] = f
        threshold[i] = float(node["threshold"])
        left[i] = l
        right[i] = r
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    for i in range(n):
        if feature[i] != _LEAF:
            for child in (left[i], right[i]):
                if seen[child]:
                    raise ModelIOError(f"node {child} has two parents")
                seen[child] = True
    if not seen.all():
        raise ModelIOError("unreachable nodes in tree")
    return Tree(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        value=value,
        n_train=n_train,
        class_counts=None,
        params=params,
        n_features=n_features,
    )


def _params_to_dict(params: TreeParams) -> dict:
    return {
        "max_depth": params.max_depth,
        "min_samples_leaf": params.min_samples_leaf,
        "mtry": params.mtry,
        "split_criterion": params.split_criterion,
    }


def _params_from_dict(obj: dict) -> TreeParams:
    try:
        return TreeParams(
            max_depth=obj["max_depth"],
            min_samples_leaf=obj["min_samples_leaf"],
            mtry=obj["mtry"],
            split_criterion=obj["split_criterion"],
        )
    except (KeyError, TypeError) as exc:
        raise ModelIOError(f"invalid tree parameters: {exc}") from exc


def dumps_model(model: ForestModel | GbmModel) -> str:
    """Serialize either model kind to its JSON envelope."""
    if isinstance(model, ForestModel):
        envelope = {
            "kind": "forest",
            "seed": model.seed,
            "B": model.B,
            "mtry": model.mtry,
            "params": _params_to_dict(model.trees[0].params),
            "feature_names": list(model.feature_names),
            "trees": [tree_to_nodes(t) for t in model.trees],
        }
    elif isinstance(model, GbmModel):
        envelope = {
            "kind": "gbm",
            "f0": model.f0,
            "nu": model.nu,
            "M": model.M,
            "loss": model.loss,
            "stages": [
                {"rho": s.rho, "tree": tree_to_nodes(s.tree)} for s in model.stages
            ],
            "feature_names": list(model.feature_names),
        }
    else:
        raise ModelIOError(f"cannot serialize {type(model).__name__}")
    return json.dumps(envelope, indent=1) + "\n"


def _require(envelope: dict, keys: tuple[str, ...]) -> None:
    missing = [k for k in keys if k not in envelope]
    if missing:
        raise ModelIOError(f"model envelope missing keys {missing}")


def loads_model(text: str) -> ForestModel | GbmModel:
    """Parse a JSON envelope back into a model.

    Boosting envelopes store tree structure only, so loaded stage trees carry
    placeholder fit parameters (prediction does not read them).

    Raises:
        ModelIOError: malformed JSON, unknown kind, or invalid trees.
    """
    try:
        envelope = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelIOError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(envelope, dict):
        raise ModelIOError("model envelope must be a JSON object")
    kind = envelope.get("kind")
    if kind == "forest":
        _require(envelope, ("seed", "B", "mtry", "params", "feature_names", "trees"))
        names = tuple(envelope["feature_names"])
        params = _params_from_dict(envelope["params"])
        if params.split_criterion != GINI:
            raise ModelIOError("forest trees must use the gini criterion")
        trees = tuple(
            tree_from_nodes(nodes, params, len(names)) for nodes in envelope["trees"]
        )
        if len(trees) != envelope["B"]:
            raise ModelIOError("tree count does not match B")
        return ForestModel(
            trees=trees,
            B=envelope["B"],
            mtry=envelope["mtry"],
            seed=envelope["seed"],
            feature_names=names,
        )
    if kind == "gbm":
        _require(envelope, ("f0", "nu", "M", "loss", "stages", "feature_names"))
        if envelope["loss"] != LOGISTIC_DEVIANCE:
            raise ModelIOError(f"unknown loss {envelope['loss']!r}")
        names = tuple(envelope["feature_names"])
        stages = []
        for stage in envelope["stages"]:
            if "rho" not in stage or "tree" not in stage:
                raise ModelIOError("stage must carry rho and tree")
            nodes = stage["tree"]
            depth = max(1, sum(1 for nd in nodes if nd.get("kind") == "split"))
            params = TreeParams(
                max_depth=depth, min_samples_leaf=1, split_criterion=VARIANCE
            )
            stages.append(
                Stage(
                    rho=float(stage["rho"]),
                    tree=tree_from_nodes(nodes, params, len(names)),
                )
            )
        if len(stages) != envelope["M"]:
            raise ModelIOError("stage count does not match M")
        return GbmModel(
            f0=float(envelope["f0"]),
            nu=float(envelope["nu"]),
            stages=tuple(stages),
            seed=0,
            feature_names=names,
            loss=envelope["loss"],
        )
    raise ModelIOError(f"unknown model kind {kind!r}")


def save_model(model: ForestModel | GbmModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path) -> ForestModel | GbmModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelIOError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text)

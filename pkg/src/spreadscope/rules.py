"""Readable decision rules mined from fitted tree ensembles.

Every root-to-leaf path becomes a rule "conditions imply class". Rules are
canonicalized (one interval per feature), deduplicated, scored on a dataset
(length, support, error, lift), ranked by support or lift, and rendered as
qualitative sentences comparing thresholds with historical statistics.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .boosting import GbmModel
from .data import Dataset, StatsTable
from .errors import RuleError
from .forest import ForestModel
from .lift import lift

LE = "<="
GT = ">"

MAX_SUPPORT = "MaxSupport"
MAX_LIFT = "MaxLift"


@dataclass(frozen=True)
class Condition:
    """One comparison against a feature: value <= threshold or value > threshold."""

    feature: str
    op: str
    threshold: float

    def __post_init__(self) -> None:
        if self.op not in (LE, GT):
            raise RuleError(f"unknown condition operator {self.op!r}")
        if not np.isfinite(self.threshold):
            raise RuleError("condition threshold must be finite")

    def holds(self, values: np.ndarray) -> np.ndarray:
        if self.op == LE:
            return values <= self.threshold
        return values > self.threshold

    def to_text(self) -> str:
        return f"{self.feature}{self.op}{self.threshold:g}"


@dataclass(frozen=True)
class RuleMetrics:
    length: int
    support: float
    error: float
    lift: float


@dataclass(frozen=True)
class Rule:
    """Conjunction of conditions implying a class; metrics filled by scoring.

    ``metrics`` is None before scoring, and stays None for a rule no row of
    the scoring population satisfies (the rule is kept, flagged by the gap).
    """

    conditions: tuple[Condition, ...]
    prediction: int
    metrics: RuleMetrics | None = None

    def key(self) -> tuple:
        canon = tuple((c.feature, c.op, c.threshold) for c in self.conditions)
        return (canon, self.prediction)

    def mask(self, ds: Dataset) -> np.ndarray:
        """Boolean row mask of ds satisfying every condition."""
        out = np.ones(ds.n, dtype=bool)
        columns = {name: i for i, name in enumerate(ds.feature_names)}
        for cond in self.conditions:
            if cond.feature not in columns:
                raise RuleError(f"rule references unknown feature {cond.feature!r}")
            out &= cond.holds(ds.features[:, columns[cond.feature]])
        return out

    def to_text(self) -> str:
        if not self.conditions:
            return "TRUE"
        return " & ".join(c.to_text() for c in self.conditions)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    provenance: str
    population: str = ""


def _leaf_class(value: float, probability: bool) -> int:
    # Forest leaves hold class probabilities, boosting leaves hold margins.
    if probability:
        return int(value >= 0.5)
    return int(value > 0.0)


def extract_rules(model: ForestModel | GbmModel) -> RuleSet:
    """One unscored rule per leaf, across all trees, in (tree, leaf) order.

    A model with no trees (zero-stage boosting) yields the single trivial
    rule with no conditions predicting the base class.
    """
    if isinstance(model, ForestModel):
        trees, probability, provenance = model.trees, True, "forest"
    elif isinstance(model, GbmModel):
        trees = tuple(s.tree for s in model.stages)
        probability, provenance = False, "gbm"
    else:
        raise RuleError(f"cannot extract rules from {type(model).__name__}")
    names = model.feature_names
    if not trees:
        base = Rule(conditions=(), prediction=int(model.f0 > 0.0))
        return RuleSet(rules=(base,), provenance=provenance)
    rules = []
    for tree in trees:
        for leaf in tree.leaves():
            conditions = tuple(
                Condition(names[f], LE if went_left else GT, t)
                for f, t, went_left in tree.path_to(int(leaf))
            )
            prediction = _leaf_class(float(tree.value[leaf]), probability)
            rules.append(Rule(conditions=conditions, prediction=prediction))
    return RuleSet(rules=tuple(rules), provenance=provenance)


def canonicalize(rule: Rule) -> Rule | None:
    """Merge to one interval per feature; None when the interval is empty.

    Keeps the smallest upper bound and the largest lower bound per feature,
    then sorts conditions by (feature, op). A feature whose merged interval
    (lower, upper] is empty makes the whole conjunction unsatisfiable, so the
    rule is dropped.
    """
    upper: dict[str, float] = {}
    lower: dict[str, float] = {}
    for cond in rule.conditions:
        bounds = upper if cond.op == LE else lower
        keep = min if cond.op == LE else max
        bounds[cond.feature] = (
            cond.threshold
            if cond.feature not in bounds
            else keep(bounds[cond.feature], cond.threshold)
        )
    merged = []
    for feature in set(upper) | set(lower):
        if feature in upper and feature in lower and upper[feature] <= lower[feature]:
            return None
        if feature in upper:
            merged.append(Condition(feature, LE, upper[feature]))
        if feature in lower:
            merged.append(Condition(feature, GT, lower[feature]))
    merged.sort(key=lambda c: (c.feature, c.op))
    return replace(rule, conditions=tuple(merged))


def dedupe(rs: RuleSet) -> RuleSet:
    """Canonicalize every rule, drop contradictions, keep first occurrences."""
    seen = set()
    kept = []
    for rule in rs.rules:
        canon = canonicalize(rule)
        if canon is None:
            continue
        if canon.key() in seen:
            continue
        seen.add(canon.key())
        kept.append(canon)
    return replace(rs, rules=tuple(kept))


def score_rules(rs: RuleSet, ds: Dataset) -> RuleSet:
    """Fill support, error, and lift for every rule against ds.

    support is the satisfying fraction, error the mistaken fraction within
    it, and lift the rule's own class rate inside the condition relative to
    that class's base rate (class 0 rules invert the target). Zero-support
    rules keep metrics None.
    """
    if ds.n == 0:
        raise RuleError("cannot score rules on an empty dataset")
    scored = []
    for rule in rs.rules:
        canon = canonicalize(rule)
        if canon is None:
            scored.append(replace(rule, metrics=None))
            continue
        mask = canon.mask(ds)
        count = int(mask.sum())
        if count == 0:
            scored.append(replace(canon, metrics=None))
            continue
        hits = ds.target[mask]
        target = ds.target if canon.prediction == 1 else 1 - ds.target
        metrics = RuleMetrics(
            length=len(canon.conditions),
            support=count / ds.n,
            error=float((hits != canon.prediction).mean()),
            lift=lift(mask, target),
        )
        scored.append(replace(canon, metrics=metrics))
    return replace(rs, rules=tuple(scored), population=f"n={ds.n}")


def _rank_key(criterion: str):
    def key(rule: Rule):
        m = rule.metrics
        if m is None:  # zero-support rules sort last
            head = (1, 0.0, 0.0)
        elif criterion == MAX_SUPPORT:
            head = (0, -m.support, 0.0)
        else:
            head = (0, -m.lift, -m.support)
        return head + (len(rule.conditions), rule.to_text(), rule.prediction)

    return key


def rank_rules(rs: RuleSet, criterion: str = MAX_LIFT, top_k: int = 5) -> list[Rule]:
    """Top rules by support or by (lift, support), deterministically.

    Remaining ties prefer fewer conditions, then the serialized rule text.
    """
    if criterion not in (MAX_SUPPORT, MAX_LIFT):
        raise RuleError(f"unknown ranking criterion {criterion!r}")
    if top_k < 1:
        raise RuleError("top_k must be at least 1")
    return sorted(rs.rules, key=_rank_key(criterion))[:top_k]


def _nearest_label(threshold: float, lo: float, mean: float, hi: float) -> str:
    # Ties involving the mean resolve to "average".
    distances = (
        (abs(threshold - mean), 0, "average"),
        (abs(threshold - lo), 1, "small"),
        (abs(threshold - hi), 2, "big"),
    )
    return min(distances)[2]


def label_thresholds(rule: Rule, stats: StatsTable) -> str:
    """Qualitative sentence comparing each threshold with min/mean/max."""
    index = {name: i for i, name in enumerate(stats.names)}
    clauses = []
    for cond in rule.conditions:
        if cond.feature not in index:
            raise RuleError(f"no statistics for feature {cond.feature!r}")
        i = index[cond.feature]
        label = _nearest_label(
            cond.threshold, float(stats.min[i]), float(stats.mean[i]), float(stats.max[i])
        )
        verb = "lower or equal than" if cond.op == LE else "greater than"
        clauses.append(f"{cond.feature} is {verb} a {label} value")
    condition_text = " and ".join(clauses) if clauses else "always"
    outcome = "economic recession" if rule.prediction == 1 else "no economic recession"
    sentence = f"When {condition_text}, the rule signals {outcome}"
    if rule.metrics is not None:
        sentence += (
            f" with lift {rule.metrics.lift:.2f} over the complementary conditions"
        )
    return sentence + "."


@dataclass(frozen=True)
class RuleHits:
    """Months satisfying a rule, and the positive episodes they touch."""

    months: tuple[tuple[str, int], ...]
    episodes: tuple[tuple[str, str], ...]


def _positive_episodes(ds: Dataset) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, flag in enumerate(ds.target):
        if flag == 1 and start is None:
            start = i
        elif flag == 0 and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, ds.n - 1))
    return runs


def rule_hits(rule: Rule, ds: Dataset) -> RuleHits:
    """All months satisfying the rule, plus the recession episodes hit."""
    mask = rule.mask(ds)
    months = tuple(
        (ds.dates[i], int(ds.target[i])) for i in np.flatnonzero(mask)
    )
    episodes = tuple(
        (ds.dates[a], ds.dates[b])
        for a, b in _positive_episodes(ds)
        if bool(mask[a : b + 1].any())
    )
    return RuleHits(months=months, episodes=episodes)


def _metric_cells(rule: Rule) -> list[str]:
    m = rule.metrics
    if m is None:
        return ["", str(len(rule.conditions)), "", ""]
    return [
        repr(float(m.error)),
        str(m.length),
        repr(float(m.support)),
        repr(float(m.lift)),
    ]


def rules_csv(rs: RuleSet, ds: Dataset) -> str:
    """Full dump, one row per rule, with the months each rule fires on."""
    lines = ["rule_id,conditions,prediction,error,length,support,lift,hit_months"]
    for i, rule in enumerate(rs.rules):
        hit = ";".join(date for date, _ in rule_hits(rule, ds).months)
        cells = [str(i), rule.to_text(), str(rule.prediction), *_metric_cells(rule), hit]
        lines.append(",".join('"' + c + '"' if "," in c else c for c in cells))
    return "\n".join(lines) + "\n"


def ranked_csv(rules: list[Rule]) -> str:
    """Compact ranked view: conditions and the four quality metrics."""
    lines = ["conditions,prediction,error,length,support,lift"]
    for rule in rules:
        lines.append(
            ",".join([rule.to_text(), str(rule.prediction), *_metric_cells(rule)])
        )
    return "\n".join(lines) + "\n"


def labels_report(rules: list[Rule], stats: StatsTable) -> str:
    """One qualitative sentence per rule."""
    return "\n".join(label_thresholds(rule, stats) for rule in rules) + "\n"

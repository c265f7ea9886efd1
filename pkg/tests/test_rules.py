"""Rule extraction, canonicalization, scoring, and ranking checks."""
import random

import numpy as np
import pytest

from spreadscope.boosting import GbmModel, fit_gbm
from spreadscope.data import descriptive_stats
from spreadscope.errors import RuleError
from spreadscope.forest import ForestModel, fit_forest
from spreadscope.lift import lift
from spreadscope.rules import (
    GT,
    LE,
    MAX_LIFT,
    MAX_SUPPORT,
    Condition,
    Rule,
    RuleSet,
    canonicalize,
    dedupe,
    extract_rules,
    label_thresholds,
    labels_report,
    rank_rules,
    ranked_csv,
    rule_hits,
    rules_csv,
    score_rules,
)
from spreadscope.tree import TreeParams, VARIANCE, fit_tree

from .conftest import make_dataset, two_gaussians


def score_oracle(rule, ds):
    """Literal row-by-row counting of support, error, and class lift."""
    satisfied = []
    for i in range(ds.n):
        ok = True
        for c in rule.conditions:
            v = ds.features[i, list(ds.feature_names).index(c.feature)]
            ok = ok and (v <= c.threshold if c.op == LE else v > c.threshold)
        if ok:
            satisfied.append(i)
    if not satisfied:
        return None
    support = len(satisfied) / ds.n
    wrong = sum(1 for i in satisfied if ds.target[i] != rule.prediction)
    inside = sum(1 for i in satisfied if ds.target[i] == rule.prediction)
    base = sum(1 for i in range(ds.n) if ds.target[i] == rule.prediction)
    return (
        support,
        wrong / len(satisfied),
        (inside / len(satisfied)) / (base / ds.n),
    )


def single_tree_forest(X, y, params):
    tree = fit_tree(X, y, params=params)
    names = tuple(f"f{i}" for i in range(X.shape[1]))
    return ForestModel(trees=(tree,), B=1, mtry=X.shape[1], seed=0, feature_names=names)


def test_stump_yields_two_complementary_rules():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 3))
    y = (X[:, 2] > 0.3).astype(int)
    model = single_tree_forest(X, y, TreeParams(max_depth=1, min_samples_leaf=5))
    rs = extract_rules(model)
    assert len(rs.rules) == 2
    left, right = rs.rules
    assert left.conditions[0].op == LE
    assert right.conditions[0].op == GT
    assert left.conditions[0].feature == right.conditions[0].feature
    assert left.conditions[0].threshold == right.conditions[0].threshold
    assert {left.prediction, right.prediction} == {0, 1}


def test_rule_count_is_total_leaf_count():
    X, y = two_gaussians(100, seed=3)
    ds = make_dataset(X, y)
    model = fit_forest(ds, B=7, mtry=2, seed=1)
    rs = extract_rules(model)
    assert len(rs.rules) == sum(t.n_leaves for t in model.trees)
    assert rs.provenance == "forest"


def test_rule_masks_match_leaf_routing():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 4))
    y = (rng.random(80) < 0.4).astype(int)
    model = single_tree_forest(X, y, TreeParams(max_depth=3, min_samples_leaf=2))
    tree = model.trees[0]
    ds = make_dataset(X, y)
    rs = extract_rules(model)
    routed = tree.apply(X)
    for rule, leaf in zip(rs.rules, tree.leaves()):
        np.testing.assert_array_equal(rule.mask(ds), routed == leaf)


def test_gbm_leaf_sign_becomes_class():
    X, y = two_gaussians(80, seed=9)
    ds = make_dataset(X, y)
    model, _ = fit_gbm(
        ds, M=4, nu=0.5,
        params=TreeParams(max_depth=2, min_samples_leaf=5, split_criterion=VARIANCE),
    )
    rs = extract_rules(model)
    assert rs.provenance == "gbm"
    leaf_values = [
        float(s.tree.value[leaf]) for s in model.stages for leaf in s.tree.leaves()
    ]
    assert [r.prediction for r in rs.rules] == [int(v > 0) for v in leaf_values]


def test_zero_stage_model_gives_trivial_rule():
    model = GbmModel(f0=-1.7, nu=0.1, stages=(), seed=0, feature_names=("a", "b"))
    rs = extract_rules(model)
    assert len(rs.rules) == 1
    assert rs.rules[0].conditions == ()
    assert rs.rules[0].prediction == 0
    assert rs.rules[0].to_text() == "TRUE"


def test_extract_rejects_unknown_model():
    with pytest.raises(RuleError, match="extract"):
        extract_rules(object())


def test_canonicalize_merges_intervals():
    rule = Rule(
        conditions=(
            Condition("a", LE, 5.0),
            Condition("a", LE, 3.0),
            Condition("b", GT, 1.0),
            Condition("b", GT, 2.0),
        ),
        prediction=1,
    )
    canon = canonicalize(rule)
    assert canon.conditions == (
        Condition("a", LE, 3.0),
        Condition("b", GT, 2.0),
    )
    assert canonicalize(canon) == canon  # idempotent


def test_canonicalize_drops_contradictions():
    rule = Rule(
        conditions=(Condition("a", LE, 3.0), Condition("a", GT, 5.0)), prediction=1
    )
    assert canonicalize(rule) is None
    boundary = Rule(
        conditions=(Condition("a", LE, 3.0), Condition("a", GT, 3.0)), prediction=1
    )
    assert canonicalize(boundary) is None


def test_canonical_equality_matches_mask_equality():
    # Over a dense sample, two rules collapse to the same canonical form
    # exactly when they select the same rows.
    rng = np.random.default_rng(11)
    X = rng.uniform(size=(400, 3))
    ds = make_dataset(X, (rng.random(400) < 0.5).astype(int))
    grid = [0.3, 0.6]

    def random_rule():
        conds = tuple(
            Condition(f"f{rng.integers(3)}", rng.choice([LE, GT]), float(rng.choice(grid)))
            for _ in range(rng.integers(1, 3))
        )
        return Rule(conditions=conds, prediction=1)

    def signature(rule):
        canon = canonicalize(rule)
        return "EMPTY" if canon is None else canon.key()

    def mask_of(rule):
        canon = canonicalize(rule)
        return np.zeros(400, dtype=bool) if canon is None else canon.mask(ds)

    rules = [random_rule() for _ in range(40)]
    for a in rules:
        for b in rules:
            same_mask = bool(np.array_equal(mask_of(a), mask_of(b)))
            assert (signature(a) == signature(b)) == same_mask


def test_canonicalization_preserves_masks():
    rng = np.random.default_rng(13)
    X = rng.uniform(size=(200, 3))
    ds = make_dataset(X, (rng.random(200) < 0.5).astype(int))
    for _ in range(20):
        conds = tuple(
            Condition(f"f{rng.integers(3)}", rng.choice([LE, GT]), float(rng.uniform()))
            for _ in range(rng.integers(1, 5))
        )
        rule = Rule(conditions=conds, prediction=1)
        canon = canonicalize(rule)
        expected = rule.mask(ds)
        got = np.zeros(200, dtype=bool) if canon is None else canon.mask(ds)
        np.testing.assert_array_equal(got, expected)


def test_dedupe_removes_repeats_and_contradictions():
    a = Rule(conditions=(Condition("a", LE, 1.0),), prediction=1)
    b = Rule(  # same canonical form as a
        conditions=(Condition("a", LE, 2.0), Condition("a", LE, 1.0)), prediction=1
    )
    c = Rule(conditions=(Condition("a", LE, 1.0),), prediction=0)  # other class
    dead = Rule(
        conditions=(Condition("a", LE, 0.0), Condition("a", GT, 1.0)), prediction=1
    )
    rs = dedupe(RuleSet(rules=(a, b, c, dead), provenance="test"))
    assert len(rs.rules) == 2
    assert rs.rules[0].key() == canonicalize(a).key()
    assert rs.rules[1].prediction == 0


def test_vacuous_majority_rule_scores():
    rng = np.random.default_rng(17)
    y = (rng.random(200) < 0.1).astype(int)
    while y.sum() != 20:
        y = (rng.random(200) < 0.1).astype(int)
    ds = make_dataset(rng.normal(size=(200, 2)), y)
    rs = RuleSet(rules=(Rule(conditions=(), prediction=0),), provenance="test")
    scored = score_rules(rs, ds).rules[0]
    assert scored.metrics.support == pytest.approx(1.0)
    assert scored.metrics.error == pytest.approx(0.1)
    assert scored.metrics.lift == pytest.approx(1.0)
    assert scored.metrics.length == 0


def test_scores_match_counting_oracle():
    rng = np.random.default_rng(19)
    X = rng.uniform(size=(30, 3))
    ds = make_dataset(X, (rng.random(30) < 0.4).astype(int))
    rules = []
    for _ in range(15):
        conds = tuple(
            Condition(f"f{rng.integers(3)}", rng.choice([LE, GT]), float(rng.uniform()))
            for _ in range(rng.integers(0, 3))
        )
        rules.append(Rule(conditions=conds, prediction=int(rng.integers(2))))
    scored = score_rules(RuleSet(rules=tuple(rules), provenance="test"), ds)
    assert scored.population == "n=30"
    for rule in scored.rules:
        expected = score_oracle(rule, ds)
        if expected is None:
            assert rule.metrics is None
            continue
        assert rule.metrics.support == pytest.approx(expected[0], abs=1e-15)
        assert rule.metrics.error == pytest.approx(expected[1], abs=1e-15)
        assert rule.metrics.lift == pytest.approx(expected[2], abs=1e-12)


def test_zero_support_rule_is_kept_unscored():
    ds = make_dataset(np.zeros((10, 2)), np.array([0, 1] * 5))
    rule = Rule(conditions=(Condition("f0", GT, 5.0),), prediction=1)
    scored = score_rules(RuleSet(rules=(rule,), provenance="test"), ds)
    assert len(scored.rules) == 1
    assert scored.rules[0].metrics is None


def test_metric_integer_identities():
    rng = np.random.default_rng(23)
    X = rng.uniform(size=(97, 2))
    ds = make_dataset(X, (rng.random(97) < 0.3).astype(int))
    rule = Rule(conditions=(Condition("f0", LE, 0.6),), prediction=1)
    scored = score_rules(RuleSet(rules=(rule,), provenance="t"), ds).rules[0]
    m = scored.metrics
    count = m.support * ds.n
    assert count == pytest.approx(round(count), abs=1e-9)  # integral count
    wrong = m.error * count
    assert wrong == pytest.approx(round(wrong), abs=1e-9)
    mask = scored.mask(ds)
    assert m.lift == pytest.approx(lift(mask, ds.target), abs=1e-15)


def test_rank_by_support():
    hi = Rule((Condition("a", LE, 9.0),), 0)
    lo = Rule((Condition("a", LE, 0.1),), 1)
    rng = np.random.default_rng(29)
    X = rng.uniform(size=(100, 1))
    ds = make_dataset(X, (rng.random(100) < 0.2).astype(int), names=("a",))
    scored = score_rules(RuleSet(rules=(lo, hi), provenance="t"), ds)
    ranked = rank_rules(scored, MAX_SUPPORT, top_k=2)
    assert ranked[0].metrics.support > ranked[1].metrics.support


def test_rank_by_lift_breaks_ties_by_support():
    # Construct rules with identical lift (both pure in class 1) but
    # different support.
    X = np.array([[1.0], [2.0], [3.0], [4.0], [10.0], [11.0]])
    y = np.array([0, 0, 1, 1, 1, 1])
    ds = make_dataset(X, y, names=("a",))
    narrow = Rule((Condition("a", GT, 9.0),), 1)  # 2 rows, all positive
    broad = Rule((Condition("a", GT, 2.5),), 1)  # 4 rows, all positive
    scored = score_rules(RuleSet(rules=(narrow, broad), provenance="t"), ds)
    ranked = rank_rules(scored, MAX_LIFT, top_k=2)
    assert ranked[0].metrics.lift == pytest.approx(ranked[1].metrics.lift)
    assert ranked[0].metrics.support > ranked[1].metrics.support


def test_ranking_is_permutation_stable():
    X, y = two_gaussians(120, seed=31)
    ds = make_dataset(X, y)
    model = fit_forest(ds, B=5, mtry=2, seed=2)
    scored = score_rules(dedupe(extract_rules(model)), ds)
    shuffled = list(scored.rules)
    random.Random(7).shuffle(shuffled)
    reordered = RuleSet(rules=tuple(shuffled), provenance="t", population="n")
    for criterion in (MAX_SUPPORT, MAX_LIFT):
        assert rank_rules(scored, criterion, 10) == rank_rules(reordered, criterion, 10)


def test_unscored_rules_rank_last():
    rng = np.random.default_rng(37)
    X = rng.uniform(size=(50, 1))
    ds = make_dataset(X, (rng.random(50) < 0.3).astype(int), names=("a",))
    live = Rule((Condition("a", LE, 0.9),), 1)
    dead = Rule((Condition("a", GT, 7.0),), 1)
    scored = score_rules(RuleSet(rules=(dead, live), provenance="t"), ds)
    ranked = rank_rules(scored, MAX_LIFT, top_k=2)
    assert ranked[0].metrics is not None
    assert ranked[1].metrics is None


def test_rank_rules_validation():
    rs = RuleSet(rules=(), provenance="t")
    with pytest.raises(RuleError, match="criterion"):
        rank_rules(rs, "MaxError", 5)
    with pytest.raises(RuleError, match="top_k"):
        rank_rules(rs, MAX_LIFT, 0)


def stats_for(names, rows):
    return descriptive_stats(np.array(rows, dtype=float), names)


def test_threshold_at_mean_is_average():
    stats = stats_for(("a",), [[0.0], [1.0], [2.0]])  # min 0, mean 1, max 2
    rule = Rule((Condition("a", LE, 1.0),), 1)
    text = label_thresholds(rule, stats)
    assert "a is lower or equal than a average value" in text


def test_threshold_near_min_is_small():
    stats = stats_for(("a",), [[0.0], [10.0], [20.0]])
    rule = Rule((Condition("a", GT, 0.5),), 1)
    assert "a is greater than a small value" in label_thresholds(rule, stats)


def test_mean_wins_ties():
    # Threshold 1.0 is equidistant from mean 0.0 and max 2.0.
    stats = stats_for(("a",), [[-2.0], [0.0], [2.0]])
    rule = Rule((Condition("a", LE, 1.0),), 1)
    assert "average value" in label_thresholds(rule, stats)


def test_label_mentions_outcome_and_lift():
    stats = stats_for(("a",), [[0.0], [1.0], [2.0]])
    from spreadscope.rules import RuleMetrics

    rule = Rule(
        (Condition("a", GT, 1.9),), 1,
        metrics=RuleMetrics(length=1, support=0.01, error=0.0, lift=7.0),
    )
    text = label_thresholds(rule, stats)
    assert "big value" in text
    assert "economic recession" in text
    assert "7.00" in text


def test_label_requires_stats_for_feature():
    stats = stats_for(("a",), [[0.0], [1.0]])
    rule = Rule((Condition("b", LE, 0.5),), 1)
    with pytest.raises(RuleError, match="statistics"):
        label_thresholds(rule, stats)


def test_hits_vacuous_rule_returns_all_months():
    ds = make_dataset(np.zeros((6, 1)), np.array([0, 1, 1, 0, 0, 1]), names=("a",))
    hits = rule_hits(Rule(conditions=(), prediction=1), ds)
    assert len(hits.months) == 6
    assert [flag for _, flag in hits.months] == [0, 1, 1, 0, 0, 1]
    assert len(hits.episodes) == 2  # months 1-2 and month 5


def test_hits_empty_mask():
    ds = make_dataset(np.zeros((4, 1)), np.array([0, 1, 0, 1]), names=("a",))
    hits = rule_hits(Rule((Condition("a", GT, 1.0),), 1), ds)
    assert hits.months == ()
    assert hits.episodes == ()


def test_hits_touch_only_covered_episodes():
    X = np.array([[0.0], [0.0], [5.0], [5.0], [0.0], [5.0]])
    y = np.array([1, 1, 0, 1, 0, 1])
    ds = make_dataset(X, y, names=("a",))
    hits = rule_hits(Rule((Condition("a", GT, 1.0),), 1), ds)
    # Fires on rows 2, 3, 5; touches the episode at row 3 and the one at 5,
    # but not the opening episode at rows 0-1.
    assert [d for d, _ in hits.months] == [ds.dates[2], ds.dates[3], ds.dates[5]]
    assert hits.episodes == ((ds.dates[3], ds.dates[3]), (ds.dates[5], ds.dates[5]))


def test_csv_and_report_shapes():
    X, y = two_gaussians(60, seed=41)
    ds = make_dataset(X, y)
    model = fit_forest(ds, B=2, mtry=2, seed=3)
    scored = score_rules(dedupe(extract_rules(model)), ds)
    dump = rules_csv(scored, ds).strip().splitlines()
    assert dump[0] == "rule_id,conditions,prediction,error,length,support,lift,hit_months"
    assert len(dump) == len(scored.rules) + 1
    top = rank_rules(scored, MAX_LIFT, 3)
    ranked = ranked_csv(top).strip().splitlines()
    assert ranked[0] == "conditions,prediction,error,length,support,lift"
    assert len(ranked) == len(top) + 1
    stats = descriptive_stats(X, ds.feature_names)
    report = labels_report(top, stats).strip().splitlines()
    assert len(report) == len(top)
    assert all(line.startswith("When ") for line in report)


def test_condition_validation():
    with pytest.raises(RuleError, match="operator"):
        Condition("a", "<", 1.0)
    with pytest.raises(RuleError, match="finite"):
        Condition("a", LE, float("nan"))
    ds = make_dataset(np.zeros((3, 1)), np.array([0, 1, 0]), names=("a",))
    with pytest.raises(RuleError, match="unknown feature"):
        Rule((Condition("zz", LE, 1.0),), 1).mask(ds)
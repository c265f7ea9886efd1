"""Lift-metric checks against brute-force counting oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadscope.errors import LiftError
from spreadscope.lift import decile_lift, decile_sizes, lift


def counting_lift(mask, target):
    # Independent oracle: literal probability ratio from row-by-row counts.
    n = len(target)
    joint = sum(1 for m, t in zip(mask, target) if m and t) / n
    pa = sum(1 for m in mask if m) / n
    pb = sum(1 for t in target if t) / n
    return joint / (pa * pb)


def test_independent_mask_has_unit_lift():
    # Positives split evenly across both halves.
    target = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    mask = np.array([True] * 4 + [False] * 4)
    assert lift(mask, target) == pytest.approx(1.0)


def test_perfect_mask_lift_is_inverse_base_rate():
    target = np.array([1, 1, 0, 0, 0, 0, 0, 0])  # base rate 0.25
    assert lift(target == 1, target) == pytest.approx(4.0)


def test_lift_matches_counting_oracle():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = 20
        target = (rng.random(n) < 0.3).astype(int)
        mask = rng.random(n) < 0.5
        if target.sum() == 0 or not mask.any():
            continue
        assert lift(mask, target) == pytest.approx(counting_lift(mask, target), abs=1e-12)


def test_lift_identity_relation():
    # lift * P(mask) * base_rate == P(mask and positive), exactly.
    rng = np.random.default_rng(2)
    n = 200
    target = (rng.random(n) < 0.2).astype(int)
    mask = rng.random(n) < 0.4
    value = lift(mask, target)
    lhs = value * (mask.sum() / n) * (target.sum() / n)
    assert lhs == pytest.approx(target[mask].sum() / n, abs=1e-12)


def test_lift_error_conditions():
    target = np.array([0, 1, 0, 1])
    with pytest.raises(LiftError, match="empty"):
        lift(np.zeros(4, dtype=bool), target)
    with pytest.raises(LiftError, match="no positives"):
        lift(np.ones(4, dtype=bool), np.zeros(4, dtype=int))


@pytest.mark.parametrize(
    "n, sizes",
    [
        (20, (2,) * 10),
        (23, (3, 3, 3) + (2,) * 7),
        (617, (62,) * 7 + (61,) * 3),
        (10, (1,) * 10),
    ],
)
def test_decile_sizes(n, sizes):
    assert decile_sizes(n) == sizes
    assert sum(decile_sizes(n)) == n


def test_decile_sizes_rejects_small_n():
    with pytest.raises(LiftError):
        decile_sizes(9)


def test_perfectly_separating_feature():
    # 0s then 1s: the top decile captures every positive.
    target = np.array([0] * 90 + [1] * 10)
    values = target.astype(float)
    table = decile_lift(values, target, feature="toy")
    assert table.lifts() == (0.0,) * 9 + (10.0,)
    assert table.deciles[9].positives == 10
    assert table.base_rate == pytest.approx(0.1)


def test_decile_lift_matches_counting_oracle():
    rng = np.random.default_rng(33)
    values = rng.normal(size=50)
    target = (rng.random(50) < 0.3).astype(int)
    table = decile_lift(values, target)
    order = np.argsort(values, kind="stable")
    base = target.sum() / 50
    start = 0
    for d, size in zip(table.deciles, decile_sizes(50)):
        rows = order[start : start + size]
        expected = (target[rows].sum() / size) / base
        assert d.lift == pytest.approx(expected, abs=1e-12)
        assert d.count == size
        start += size


def test_decile_positive_counts_sum_to_total():
    rng = np.random.default_rng(4)
    values = rng.normal(size=173)
    target = (rng.random(173) < 0.25).astype(int)
    table = decile_lift(values, target)
    assert sum(d.positives for d in table.deciles) == target.sum()
    assert sum(d.count for d in table.deciles) == 173


def test_decile_ties_keep_row_order():
    # All values equal: bins are contiguous slices of the original rows.
    n = 30
    target = np.zeros(n, dtype=int)
    target[:3] = 1  # all positives land in decile 1
    table = decile_lift(np.zeros(n), target)
    assert table.deciles[0].positives == 3
    assert all(d.positives == 0 for d in table.deciles[1:])


@given(
    scale=st.floats(min_value=1e-3, max_value=1e3),
    shift=st.floats(min_value=-100, max_value=100),
    seed=st.integers(min_value=0, max_value=2**16),
)
@settings(max_examples=40, deadline=None)
def test_decile_lift_rank_invariance(scale, shift, seed):
    # Deciles depend only on ranks: positive affine maps change nothing.
    rng = np.random.default_rng(seed)
    values = rng.normal(size=40)
    target = (rng.random(40) < 0.4).astype(int)
    if target.sum() == 0:
        target[0] = 1
    a = decile_lift(values, target)
    b = decile_lift(scale * values + shift, target)
    assert a.lifts() == b.lifts()


def test_decile_lift_interval_metadata():
    values = np.arange(20.0)
    target = np.array([0, 1] * 10)
    table = decile_lift(values, target)
    assert table.deciles[0].lo == 0.0
    assert table.deciles[0].hi == 1.0
    assert table.deciles[9].hi == 19.0
    # Ranges of successive bins never overlap for distinct values.
    for a, b in zip(table.deciles, table.deciles[1:]):
        assert a.hi <= b.lo


def test_decile_csv_shape():
    values = np.arange(20.0)
    target = np.array([0, 1] * 10)
    lines = decile_lift(values, target, feature="M3-M6").to_csv().strip().splitlines()
    assert lines[0] == "feature,decile,interval_lo,interval_hi,count,lift"
    assert len(lines) == 11
    assert lines[1].startswith("M3-M6,1,")

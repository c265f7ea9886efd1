"""Ingestion, spread construction, alignment, split, and summary-stat checks."""
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadscope.data import (
    SPREAD_NAMES,
    SPREADS,
    TENORS,
    Dataset,
    attach_target,
    compute_spreads,
    descriptive_stats,
    parse_yield_csv,
    pearson_correlations,
    temporal_split,
)
from spreadscope.errors import (
    AlignmentError,
    CorrelationError,
    ParseError,
    SplitError,
    StatsError,
)

HEADER = "DATE,GS3M,GS6M,GS1,GS2,GS3,GS5,GS7,GS10,GS20"


def panel_csv(rows):
    return HEADER + "\n" + "\n".join(rows) + "\n"


def flat_row(date, level):
    return f"{date}," + ",".join([f"{level:.2f}"] * 9)


def test_tenor_count_and_order():
    assert [t.name for t in TENORS] == [
        "M3", "M6", "Y1", "Y2", "Y3", "Y5", "Y7", "Y10", "Y20",
    ]
    assert [t.months for t in TENORS] == [3, 6, 12, 24, 36, 60, 84, 120, 240]


def test_spread_catalogue():
    # 9 choose 2 pairs, each tenor in 8 of them.
    assert len(SPREADS) == 36
    counts = {t.name: 0 for t in TENORS}
    for s in SPREADS:
        counts[s.first.name] += 1
        counts[s.second.name] += 1
    assert all(c == 8 for c in counts.values())


def test_spread_naming_orientation():
    # Same unit: shorter maturity first. Cross unit: year tenor first.
    assert "M3-M6" in SPREAD_NAMES
    assert "Y1-Y10" in SPREAD_NAMES
    assert "Y3-M3" in SPREAD_NAMES
    assert "M6-M3" not in SPREAD_NAMES
    assert "M3-Y3" not in SPREAD_NAMES


def test_spread_column_order():
    # Lexicographic by (first tenor months, second tenor months).
    keys = [(s.first.months, s.second.months) for s in SPREADS]
    assert keys == sorted(keys)
    assert SPREAD_NAMES[0] == "M3-M6"
    assert SPREAD_NAMES[1] == "Y1-M3"
    assert SPREAD_NAMES[-1] == "Y20-M6"


def test_parse_happy_path_and_values():
    csv_text = panel_csv([
        "1969-01,6.14,6.34,6.30,6.17,6.08,5.97,5.92,5.88,5.80",
        "1969-02,6.12,6.30,6.28,6.20,6.10,6.01,5.95,5.90,5.85",
    ])
    result = parse_yield_csv(csv_text)
    assert result.panel.dates == ("1969-01", "1969-02")
    assert result.rejected == ()
    frame = compute_spreads(result.panel)
    # M3-M6 = GS3M - GS6M; Y1-M3 = GS1 - GS3M.
    assert frame.values[0, SPREAD_NAMES.index("M3-M6")] == pytest.approx(6.14 - 6.34)
    assert frame.values[0, SPREAD_NAMES.index("Y1-M3")] == pytest.approx(6.30 - 6.14)
    assert frame.values[1, SPREAD_NAMES.index("Y20-M6")] == pytest.approx(5.85 - 6.30)


def test_parse_accepts_day_suffix_and_column_reorder():
    shuffled = "DATE,GS20,GS10,GS7,GS5,GS3,GS2,GS1,GS6M,GS3M"
    text = shuffled + "\n1990-01-01,8.0,8.1,8.2,8.3,8.4,8.5,8.6,8.7,8.8\n" \
        + "1990-02-01,8.0,8.1,8.2,8.3,8.4,8.5,8.6,8.7,8.8\n"
    result = parse_yield_csv(io.StringIO(text))
    assert result.panel.dates == ("1990-01", "1990-02")
    # GS3M landed in tenor slot 0 regardless of file order.
    assert result.panel.rates[0, 0] == pytest.approx(8.8)
    assert result.panel.rates[0, 8] == pytest.approx(8.0)


def test_parse_rejects_rows_with_missing_cells():
    csv_text = panel_csv([
        "1969-01,6.14,6.34,6.30,6.17,6.08,5.97,.,5.88,5.80",
        "1969-02,6.12,6.30,6.28,6.20,6.10,6.01,5.95,5.90,5.85",
    ])
    result = parse_yield_csv(csv_text)
    assert result.rejected == ("1969-01",)
    assert result.panel.dates == ("1969-02",)


@pytest.mark.parametrize(
    "row, message",
    [
        ("19690-1,1,1,1,1,1,1,1,1,1", "malformed date"),
        ("1969-13,1,1,1,1,1,1,1,1,1", "malformed date"),
        ("1969-03,1,1,1,abc,1,1,1,1,1", "non-numeric"),
        ("1969-03,1,1,1,-0.5,1,1,1,1,1", "negative"),
    ],
)
def test_parse_rejects_bad_cells(row, message):
    csv_text = panel_csv([flat_row("1969-02", 5.0), row])
    with pytest.raises(ParseError, match=message):
        parse_yield_csv(csv_text)


def test_parse_rejects_duplicate_and_out_of_order_months():
    with pytest.raises(ParseError, match="duplicate"):
        parse_yield_csv(panel_csv([flat_row("1969-01", 5.0), flat_row("1969-01", 5.1)]))
    with pytest.raises(ParseError, match="out-of-order"):
        parse_yield_csv(panel_csv([flat_row("1969-02", 5.0), flat_row("1969-01", 5.1)]))


def test_parse_allows_gaps():
    # A gap is a consequence of rejected months upstream, not an error.
    result = parse_yield_csv(panel_csv([flat_row("1969-01", 5.0), flat_row("1969-07", 5.1)]))
    assert result.panel.dates == ("1969-01", "1969-07")


def test_parse_missing_series_column():
    text = "DATE,GS3M,GS6M,GS1,GS2,GS3,GS5,GS7,GS10\n1969-01,1,1,1,1,1,1,1,1\n"
    with pytest.raises(ParseError, match="GS20"):
        parse_yield_csv(text)


@given(
    level=st.floats(min_value=0.5, max_value=15.0),
    shift=st.floats(min_value=0.0, max_value=5.0),
    seed=st.integers(min_value=0, max_value=2**16),
)
@settings(max_examples=50, deadline=None)
def test_spreads_ignore_parallel_level_shifts(level, shift, seed):
    # Adding a constant to every tenor leaves every spread unchanged.
    from spreadscope.data import YieldPanel

    rng = np.random.default_rng(seed)
    base = level + rng.uniform(-0.3, 0.3, size=(4, 9))
    dates = tuple(f"200{i}-01" for i in range(4))
    frame_a = compute_spreads(YieldPanel(dates, base))
    frame_b = compute_spreads(YieldPanel(dates, base + shift))
    np.testing.assert_allclose(frame_a.values, frame_b.values, atol=1e-9)


REC_HEADER = "DATE,USREC"


def small_dataset():
    rows = [flat_row(f"1970-{m:02d}", 5.0 + 0.1 * m) for m in range(1, 9)]
    frame = compute_spreads(parse_yield_csv(panel_csv(rows)).panel)
    rec = REC_HEADER + "\n" + "\n".join(
        f"1970-{m:02d},{1 if m in (3, 4) else 0}" for m in range(1, 9)
    ) + "\n"
    return attach_target(frame, rec)


def test_attach_target_alignment():
    ds = small_dataset()
    assert ds.n == 8
    assert ds.target.tolist() == [0, 0, 1, 1, 0, 0, 0, 0]
    assert ds.positive_share == pytest.approx(0.25)


def test_attach_target_missing_month():
    rows = [flat_row("1970-01", 5.0), flat_row("1970-02", 5.1)]
    frame = compute_spreads(parse_yield_csv(panel_csv(rows)).panel)
    rec = REC_HEADER + "\n1970-01,0\n"
    with pytest.raises(AlignmentError, match="1970-02"):
        attach_target(frame, rec)


def test_attach_target_bad_flag():
    rows = [flat_row("1970-01", 5.0)]
    frame = compute_spreads(parse_yield_csv(panel_csv(rows)).panel)
    with pytest.raises(AlignmentError, match="flag"):
        attach_target(frame, REC_HEADER + "\n1970-01,2\n")


def test_temporal_split_windows():
    ds = small_dataset()
    train, test = temporal_split(ds, "1970-01", "1970-05", "1970-06", "1970-08")
    assert train.dates == tuple(f"1970-{m:02d}" for m in range(1, 6))
    assert test.dates == tuple(f"1970-{m:02d}" for m in range(6, 9))
    # Row content carried over unchanged.
    np.testing.assert_array_equal(train.features, ds.features[:5])
    np.testing.assert_array_equal(test.target, ds.target[5:])


def test_temporal_split_excludes_between_rows():
    ds = small_dataset()
    train, test = temporal_split(ds, "1970-01", "1970-03", "1970-07", "1970-08")
    assert len(train.dates) == 3
    assert len(test.dates) == 2


@pytest.mark.parametrize(
    "bounds",
    [
        ("1970-05", "1970-01", "1970-06", "1970-08"),  # reversed train
        ("1970-01", "1970-06", "1970-04", "1970-08"),  # overlap
        ("1970-01", "1970-06", "1970-06", "1970-08"),  # touching
    ],
)
def test_temporal_split_rejects_bad_ranges(bounds):
    with pytest.raises(SplitError):
        temporal_split(small_dataset(), *bounds)


def test_temporal_split_rejects_empty_side():
    with pytest.raises(SplitError, match="empty"):
        temporal_split(small_dataset(), "1960-01", "1960-12", "1970-01", "1970-08")


def test_descriptive_stats_against_numpy():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(40, 3))
    table = descriptive_stats(m, ("a", "b", "c"))
    np.testing.assert_allclose(table.mean, m.mean(axis=0))
    np.testing.assert_allclose(table.median, np.median(m, axis=0))
    np.testing.assert_allclose(table.min, m.min(axis=0))
    np.testing.assert_allclose(table.max, m.max(axis=0))
    # Sample standard deviation, not population.
    np.testing.assert_allclose(table.sd, m.std(axis=0, ddof=1))
    assert table.row("b")["sd"] == pytest.approx(m[:, 1].std(ddof=1))


def test_descriptive_stats_needs_two_rows():
    with pytest.raises(StatsError):
        descriptive_stats(np.ones((1, 2)), ("a", "b"))


def test_pearson_symmetry_and_diagonal():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(60, 5))
    corr = pearson_correlations(m, tuple("abcde"))
    np.testing.assert_array_equal(corr.matrix, corr.matrix.T)
    np.testing.assert_allclose(np.diag(corr.matrix), 1.0)
    assert np.all(np.abs(corr.matrix) <= 1.0)
    # Spot-check one off-diagonal entry against the textbook formula.
    x, y = m[:, 0], m[:, 3]
    expected = ((x - x.mean()) * (y - y.mean())).sum() / np.sqrt(
        ((x - x.mean()) ** 2).sum() * ((y - y.mean()) ** 2).sum()
    )
    assert corr.coefficient("a", "d") == pytest.approx(expected)


def test_pearson_zero_variance_column():
    m = np.ones((10, 2))
    m[:, 0] = np.arange(10)
    with pytest.raises(CorrelationError, match="b"):
        pearson_correlations(m, ("a", "b"))


def test_most_correlated_picks_strongest_negative():
    rng = np.random.default_rng(5)
    base = rng.normal(size=100)
    noise = rng.normal(size=(100, 2)) * 0.1
    m = np.column_stack([
        base,
        base + noise[:, 0],       # near-duplicate of a
        -base + noise[:, 1],      # strong opposite of a
    ])
    corr = pearson_correlations(m, ("a", "b", "c"))
    partner, coef = corr.most_correlated("a")
    assert partner == "c"
    assert coef < -0.9
    assert corr.partners()["b"][0] == "c"


def test_most_correlated_excludes_self():
    rng = np.random.default_rng(9)
    m = rng.normal(size=(50, 4))
    corr = pearson_correlations(m, tuple("wxyz"))
    for name in "wxyz":
        partner, _ = corr.most_correlated(name)
        assert partner != name


def test_dataset_rejects_nonbinary_target():
    with pytest.raises(AlignmentError):
        Dataset(("2000-01",), np.zeros((1, 36)), np.array([2]))


def test_csv_round_trip_precision():
    rng = np.random.default_rng(13)
    m = rng.normal(size=(30, 3))
    table = descriptive_stats(m, ("a", "b", "c"))
    lines = table.to_csv().strip().splitlines()
    assert lines[0] == "feature,mean,median,min,max,sd"
    # repr round-trips float64 exactly.
    cells = lines[1].split(",")
    assert float(cells[1]) == table.mean[0]

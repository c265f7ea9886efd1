"""Yield-panel ingestion, term-spread construction, and dataset assembly.

The data model is small and fixed: nine Treasury constant-maturity tenors,
the 36 pairwise spreads between them, and a binary recession flag per month.
Parsing is strict about dates and numbers; months missing any tenor are
rejected rather than imputed, because every spread mixes two columns and an
imputed value would contaminate all of them.
"""
from __future__ import annotations

import csv
import io
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    AlignmentError,
    CorrelationError,
    ParseError,
    SplitError,
    StatsError,
)

__all__ = [
    "Tenor",
    "SpreadId",
    "TENORS",
    "SPREADS",
    "SPREAD_NAMES",
    "SERIES_IDS",
    "YieldPanel",
    "ParseResult",
    "SpreadFrame",
    "Dataset",
    "StatsTable",
    "CorrMatrix",
    "parse_yield_csv",
    "compute_spreads",
    "attach_target",
    "temporal_split",
    "descriptive_stats",
    "pearson_correlations",
]

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})(?:-01)?$")


@dataclass(frozen=True, order=True)
class Tenor:
    """One constant-maturity tenor, ordered by maturity in months."""

    months: int
    name: str = field(compare=False)

    @property
    def unit(self) -> str:
        return "Month" if self.name.startswith("M") else "Year"


TENORS: tuple[Tenor, ...] = (
    Tenor(3, "M3"),
    Tenor(6, "M6"),
    Tenor(12, "Y1"),
    Tenor(24, "Y2"),
    Tenor(36, "Y3"),
    Tenor(60, "Y5"),
    Tenor(84, "Y7"),
    Tenor(120, "Y10"),
    Tenor(240, "Y20"),
)

# FRED series identifier per tenor, in tenor order.
SERIES_IDS: tuple[str, ...] = (
    "GS3M", "GS6M", "GS1", "GS2", "GS3", "GS5", "GS7", "GS10", "GS20",
)

_TENOR_BY_SERIES = dict(zip(SERIES_IDS, TENORS))
_TENOR_INDEX = {t.name: i for i, t in enumerate(TENORS)}


@dataclass(frozen=True)
class SpreadId:
    """A named, oriented tenor pair; the spread value is rate(first) - rate(second).

    Naming puts the shorter tenor first within a unit (M3-M6, Y1-Y10) and the
    year tenor first across units (Y3-M3, Y20-M6).
    """

    first: Tenor
    second: Tenor

    @property
    def name(self) -> str:
        return f"{self.first.name}-{self.second.name}"


def _canonical_spreads() -> tuple[SpreadId, ...]:
    out = []
    for a, b in itertools.combinations(TENORS, 2):
        if a.unit == b.unit:
            first, second = (a, b) if a.months < b.months else (b, a)
        else:
            first, second = (a, b) if a.unit == "Year" else (b, a)
        out.append(SpreadId(first, second))
    out.sort(key=lambda s: (s.first.months, s.second.months))
    return tuple(out)


SPREADS: tuple[SpreadId, ...] = _canonical_spreads()
SPREAD_NAMES: tuple[str, ...] = tuple(s.name for s in SPREADS)


def _parse_month(cell: str, row_no: int) -> str:
    m = _MONTH_RE.match(cell.strip())
    if not m:
        raise ParseError(f"row {row_no}: malformed date {cell!r} (want YYYY-MM or YYYY-MM-01)")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ParseError(f"row {row_no}: malformed date {cell!r} (month out of range)")
    return f"{year:04d}-{month:02d}"


def _month_ordinal(month: str) -> int:
    y, m = month.split("-")
    return int(y) * 12 + int(m) - 1


def _read_text(source: str | TextIO) -> str:
    return source.read() if hasattr(source, "read") else source


@dataclass(frozen=True)
class YieldPanel:
    """Date-indexed matrix of annualized percent rates for the nine tenors."""

    dates: tuple[str, ...]
    rates: np.ndarray  # [n_months, 9], tenor order

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=np.float64)
        if rates.ndim != 2 or rates.shape != (len(self.dates), len(TENORS)):
            raise ParseError("panel shape does not match dates x 9 tenors")
        if not np.all(np.isfinite(rates)):
            raise ParseError("panel contains non-finite rates")
        if np.any(rates < 0):
            raise ParseError("panel contains negative rates")
        ords = [_month_ordinal(d) for d in self.dates]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise ParseError("panel dates are not strictly increasing")
        rates.flags.writeable = False
        object.__setattr__(self, "rates", rates)

    @property
    def n_months(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ParseResult:
    """A parsed panel plus the dates rejected for missing tenors."""

    panel: YieldPanel
    rejected: tuple[str, ...]


def parse_yield_csv(source: str | TextIO) -> ParseResult:
    """Parse a merged wide CSV ``DATE,GS3M,...,GS20`` into a :class:`YieldPanel`.

    Dates are ``YYYY-MM`` or ``YYYY-MM-01``. Missing cells are marked ``.``;
    any row with a missing tenor is excluded from the panel and reported in
    :attr:`ParseResult.rejected`.

    Raises:
        ParseError: malformed date, non-numeric or negative rate, duplicate
            month, or out-of-order months, with the offending row named.
    """
    text = _read_text(source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("empty input")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].upper() != "DATE":
        raise ParseError("header must start with DATE")
    series = header[1:]
    unknown = [s for s in series if s not in _TENOR_BY_SERIES]
    if unknown:
        raise ParseError(f"unknown series column(s): {', '.join(unknown)}")
    missing = [s for s in SERIES_IDS if s not in series]
    if missing:
        raise ParseError(f"missing series column(s): {', '.join(missing)}")
    col_for_tenor = [series.index(s) + 1 for s in SERIES_IDS]

    dates: list[str] = []
    kept_rates: list[list[float]] = []
    rejected: list[str] = []
    last_ord: int | None = None
    seen: set[str] = set()
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"row {row_no}: expected {len(header)} cells, got {len(row)}")
        month = _parse_month(row[0], row_no)
        if month in seen:
            raise ParseError(f"row {row_no}: duplicate month {month}")
        ordinal = _month_ordinal(month)
        if last_ord is not None and ordinal <= last_ord:
            raise ParseError(f"row {row_no}: out-of-order month {month}")
        seen.add(month)
        last_ord = ordinal
        values: list[float] = []
        has_missing = False
        for col in col_for_tenor:
            cell = row[col].strip()
            if cell == ".":
                has_missing = True
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"row {row_no}: non-numeric rate {cell!r}") from None
            if not np.isfinite(value):
                raise ParseError(f"row {row_no}: non-finite rate {cell!r}")
            if value < 0:
                raise ParseError(f"row {row_no}: negative rate {cell!r}")
            values.append(value)
        if has_missing:
            rejected.append(month)
            continue
        dates.append(month)
        kept_rates.append(values)
    if not dates:
        raise ParseError("no complete rows in input")
    panel = YieldPanel(tuple(dates), np.array(kept_rates, dtype=np.float64))
    return ParseResult(panel, tuple(rejected))


@dataclass(frozen=True)
class SpreadFrame:
    """Date-indexed 36-column spread matrix, before the target is attached."""

    dates: tuple[str, ...]
    values: np.ndarray  # [n, 36], SPREADS order

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def compute_spreads(panel: YieldPanel) -> SpreadFrame:
    """Compute the 36 canonical spreads, column k = rate(first_k) - rate(second_k)."""
    first = np.array([_TENOR_INDEX[s.first.name] for s in SPREADS])
    second = np.array([_TENOR_INDEX[s.second.name] for s in SPREADS])
    values = panel.rates[:, first] - panel.rates[:, second]
    return SpreadFrame(panel.dates, values)


@dataclass(frozen=True)
class Dataset:
    """Spread features plus the binary recession target, aligned by month."""

    dates: tuple[str, ...]
    features: np.ndarray  # [n, n_features]
    target: np.ndarray  # [n], values in {0, 1}
    feature_names: tuple[str, ...] = SPREAD_NAMES

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        target = np.asarray(self.target, dtype=np.int64)
        if features.shape != (len(self.dates), len(self.feature_names)):
            raise AlignmentError("feature matrix shape does not match dates x names")
        if target.shape != (len(self.dates),):
            raise AlignmentError("target length does not match dates")
        if not np.all((target == 0) | (target == 1)):
            raise AlignmentError("target values outside {0, 1}")
        features.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "target", target)

    @property
    def n(self) -> int:
        return len(self.dates)

    @property
    def positive_share(self) -> float:
        return float(self.target.mean()) if self.n else 0.0

    def column(self, name: str) -> np.ndarray:
        try:
            return self.features[:, self.feature_names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def subset(self, mask: np.ndarray) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        dates = tuple(d for d, keep in zip(self.dates, mask) if keep)
        return Dataset(dates, self.features[mask], self.target[mask], self.feature_names)


def _parse_recession_csv(source: str | TextIO) -> dict[str, int]:
    text = _read_text(source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise AlignmentError("empty recession input")
    header = [h.strip().upper() for h in rows[0]]
    if len(header) < 2 or header[0] != "DATE":
        raise AlignmentError("recession header must be DATE,USREC")
    flags: dict[str, int] = {}
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        month = _parse_month(row[0], row_no)
        cell = row[1].strip()
        if cell not in ("0", "1"):
            raise AlignmentError(f"row {row_no}: recession flag {cell!r} outside {{0, 1}}")
        flags[month] = int(cell)
    return flags


def attach_target(frame: SpreadFrame, recession_csv: str | TextIO) -> Dataset:
    """Align the recession flag series with the spread frame.

    Raises:
        AlignmentError: a feature month is missing from the recession series,
            or a flag value falls outside {0, 1}.
    """
    flags = _parse_recession_csv(recession_csv)
    missing = [d for d in frame.dates if d not in flags]
    if missing:
        shown = ", ".join(missing[:6]) + (" ..." if len(missing) > 6 else "")
        raise AlignmentError(f"recession series missing {len(missing)} month(s): {shown}")
    target = np.array([flags[d] for d in frame.dates], dtype=np.int64)
    return Dataset(frame.dates, frame.values, target)


def temporal_split(
    ds: Dataset,
    train_start: str,
    train_end: str,
    test_start: str,
    test_end: str,
) -> tuple[Dataset, Dataset]:
    """Partition rows into a train and a test window by month, no shuffling.

    Both ranges are inclusive. The train range must end strictly before the
    test range begins; rows outside both windows are excluded.

    Raises:
        SplitError: reversed or overlapping ranges, or an empty side.
    """
    bounds = [_parse_month(m, 0) for m in (train_start, train_end, test_start, test_end)]
    o = [_month_ordinal(m) for m in bounds]
    if o[0] > o[1] or o[2] > o[3]:
        raise SplitError("range start after range end")
    if o[1] >= o[2]:
        raise SplitError("train range must end strictly before test range begins")
    ords = np.array([_month_ordinal(d) for d in ds.dates])
    train_mask = (ords >= o[0]) & (ords <= o[1])
    test_mask = (ords >= o[2]) & (ords <= o[3])
    if not train_mask.any() or not test_mask.any():
        raise SplitError("empty train or test selection")
    return ds.subset(train_mask), ds.subset(test_mask)


@dataclass(frozen=True)
class StatsTable:
    """Per-column mean, median, min, max, and sample sd."""

    names: tuple[str, ...]
    mean: np.ndarray
    median: np.ndarray
    min: np.ndarray
    max: np.ndarray
    sd: np.ndarray

    def row(self, name: str) -> dict[str, float]:
        i = self.names.index(name)
        return {
            "mean": float(self.mean[i]),
            "median": float(self.median[i]),
            "min": float(self.min[i]),
            "max": float(self.max[i]),
            "sd": float(self.sd[i]),
        }

    def to_csv(self) -> str:
        out = ["feature,mean,median,min,max,sd"]
        for i, name in enumerate(self.names):
            cells = (self.mean[i], self.median[i], self.min[i], self.max[i], self.sd[i])
            out.append(name + "," + ",".join(repr(float(v)) for v in cells))
        return "\n".join(out) + "\n"


def descriptive_stats(matrix: np.ndarray, names: Sequence[str]) -> StatsTable:
    """Population mean/median/min/max and sample sd (ddof=1) per column.

    Raises:
        StatsError: fewer than 2 rows.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(names):
        raise StatsError("matrix width does not match names")
    if matrix.shape[0] < 2:
        raise StatsError("descriptive stats need at least 2 rows")
    return StatsTable(
        names=tuple(names),
        mean=matrix.mean(axis=0),
        median=np.median(matrix, axis=0),
        min=matrix.min(axis=0),
        max=matrix.max(axis=0),
        sd=matrix.std(axis=0, ddof=1),
    )


@dataclass(frozen=True)
class CorrMatrix:
    """Pairwise Pearson coefficients with, per feature, its most negatively
    correlated partner.

    Partner selection takes the strongest negative coefficient. On this
    feature set the spreads sharing a tenor family are near-duplicates
    (coefficients +0.93 and up), so the informative partner is the opposing
    one; the strongest negative link is what the partner table reports.
    """

    names: tuple[str, ...]
    matrix: np.ndarray  # [p, p]

    def coefficient(self, a: str, b: str) -> float:
        return float(self.matrix[self.names.index(a), self.names.index(b)])

    def most_correlated(self, name: str) -> tuple[str, float]:
        i = self.names.index(name)
        row = self.matrix[i].copy()
        row[i] = np.inf  # exclude self
        j = int(np.argmin(row))
        return self.names[j], float(self.matrix[i, j])

    def partners(self) -> dict[str, tuple[str, float]]:
        return {name: self.most_correlated(name) for name in self.names}

    def to_csv(self) -> str:
        out = ["feature," + ",".join(self.names)]
        for i, name in enumerate(self.names):
            out.append(name + "," + ",".join(repr(float(v)) for v in self.matrix[i]))
        return "\n".join(out) + "\n"

    def partners_csv(self) -> str:
        out = ["feature,partner,coefficient"]
        for name in self.names:
            partner, coef = self.most_correlated(name)
            out.append(f"{name},{partner},{float(coef)!r}")
        return "\n".join(out) + "\n"


def pearson_correlations(matrix: np.ndarray, names: Sequence[str]) -> CorrMatrix:
    """Standard Pearson coefficient matrix over columns.

    Raises:
        CorrelationError: a zero-variance column, named.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(names):
        raise CorrelationError("matrix width does not match names")
    sd = matrix.std(axis=0)
    flat = np.flatnonzero(sd == 0)
    if flat.size:
        raise CorrelationError(f"zero-variance column: {names[int(flat[0])]}")
    corr = np.corrcoef(matrix, rowvar=False)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)  # enforce exact symmetry
    np.fill_diagonal(corr, 1.0)
    return CorrMatrix(tuple(names), corr)

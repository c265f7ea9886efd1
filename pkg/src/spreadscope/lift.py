"""Target-lift: the positive rate inside a selection relative to the base rate.

A lift of 1 means the selection is uninformative about the target; 4 means
rows in the selection are four times as likely to be positive. The decile
variant ranks rows by one feature and reports the lift of each tenth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LiftError

__all__ = ["Decile", "LiftTable", "lift", "decile_lift", "decile_sizes"]


def lift(condition_mask: np.ndarray, target: np.ndarray) -> float:
    """Positive rate among masked rows divided by the overall positive rate.

    Equivalently P(A and B) / (P(A) P(B)) for A = mask, B = positive.

    Raises:
        LiftError: empty mask, or a target with no positives (base rate zero).
    """
    mask = np.asarray(condition_mask, dtype=bool)
    y = np.asarray(target)
    if mask.shape != y.shape or mask.ndim != 1:
        raise LiftError("mask and target must be equal-length vectors")
    n = y.shape[0]
    selected = int(mask.sum())
    if selected == 0:
        raise LiftError("lift is undefined for an empty selection")
    positives = int(y.sum())
    if positives == 0:
        raise LiftError("lift is undefined when the target has no positives")
    return (float(y[mask].sum()) / selected) / (positives / n)


def decile_sizes(n: int) -> tuple[int, ...]:
    """Bin sizes for 10 rank bins: the first n mod 10 bins take the extra row."""
    if n < 10:
        raise LiftError("decile binning needs at least 10 rows")
    small, extra = divmod(n, 10)
    return tuple([small + 1] * extra + [small] * (10 - extra))


@dataclass(frozen=True)
class Decile:
    """One rank bin: 1-based index, value range, row count, and lift."""

    index: int
    lo: float
    hi: float
    count: int
    positives: int
    lift: float


@dataclass(frozen=True)
class LiftTable:
    """Per-decile lift of one feature against the binary target."""

    feature: str
    deciles: tuple[Decile, ...]
    base_rate: float

    def lifts(self) -> tuple[float, ...]:
        return tuple(d.lift for d in self.deciles)

    def to_csv(self) -> str:
        out = ["feature,decile,interval_lo,interval_hi,count,lift"]
        for d in self.deciles:
            out.append(
                f"{self.feature},{d.index},{float(d.lo)!r},{float(d.hi)!r},"
                f"{d.count},{float(d.lift)!r}"
            )
        return "\n".join(out) + "\n"


def decile_lift(values: np.ndarray, target: np.ndarray, feature: str = "") -> LiftTable:
    """Lift per decile of ``values``, decile 1 holding the lowest-ranked rows.

    Rows are ranked ascending; ties keep original row order, so assignment is
    purely rank-based. The reported intervals describe each bin's value range
    and may touch where ties straddle a boundary.

    Raises:
        LiftError: fewer than 10 rows, or a target with no positives.
    """
    v = np.asarray(values, dtype=np.float64)
    y = np.asarray(target)
    if v.shape != y.shape or v.ndim != 1:
        raise LiftError("values and target must be equal-length vectors")
    n = v.shape[0]
    sizes = decile_sizes(n)
    if int(y.sum()) == 0:
        raise LiftError("lift is undefined when the target has no positives")
    order = np.argsort(v, kind="stable")
    deciles = []
    start = 0
    for index, size in enumerate(sizes, start=1):
        rows = order[start : start + size]
        mask = np.zeros(n, dtype=bool)
        mask[rows] = True
        bin_values = v[rows]
        deciles.append(
            Decile(
                index=index,
                lo=float(bin_values.min()),
                hi=float(bin_values.max()),
                count=size,
                positives=int(y[rows].sum()),
                lift=lift(mask, y),
            )
        )
        start += size
    return LiftTable(feature, tuple(deciles), base_rate=float(y.mean()))

"""Confusion-matrix evaluation reported per class.

Rates with a zero denominator are reported as absent (None, printed as a
dash), never as 0: a classifier that predicts no positives has no precision,
not a precision of zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricsError

__all__ = ["ClassMetrics", "MetricsReport", "evaluate"]


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


def _fmt(value: float | None) -> str:
    return "—" if value is None else f"{value:.2f}"


@dataclass(frozen=True)
class ClassMetrics:
    precision: float | None
    recall: float | None
    specificity: float | None


@dataclass(frozen=True)
class MetricsReport:
    """Counts plus per-class precision, recall, and specificity."""

    tp: int
    fp: int
    tn: int
    fn: int
    class0: ClassMetrics
    class1: ClassMetrics
    threshold: float = 0.5

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    def for_class(self, cls: int) -> ClassMetrics:
        return self.class1 if cls == 1 else self.class0

    def to_csv(self, model: str = "model") -> str:
        out = ["model,class,precision,recall,specificity"]
        for cls in (0, 1):
            m = self.for_class(cls)
            cells = [
                "" if v is None else repr(float(v))
                for v in (m.precision, m.recall, m.specificity)
            ]
            out.append(f"{model},{cls}," + ",".join(cells))
        return "\n".join(out) + "\n"

    def to_text(self, model: str = "model") -> str:
        rows = [("model", "class", "precision", "recall", "specificity")]
        for cls in (0, 1):
            m = self.for_class(cls)
            rows.append(
                (model, str(cls), _fmt(m.precision), _fmt(m.recall), _fmt(m.specificity))
            )
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        return "\n".join(lines) + "\n"


def evaluate(labels: np.ndarray, truth: np.ndarray, threshold: float = 0.5) -> MetricsReport:
    """Confusion counts and per-class rates; class 0 scored by inversion.

    Raises:
        MetricsError: empty or mismatched inputs, or values outside {0, 1}.
    """
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape or labels.ndim != 1 or labels.size == 0:
        raise MetricsError("labels and truth must be equal-length nonempty vectors")
    for name, v in (("labels", labels), ("truth", truth)):
        if not np.all((v == 0) | (v == 1)):
            raise MetricsError(f"{name} contain values outside {{0, 1}}")
    tp = int(np.sum((labels == 1) & (truth == 1)))
    fp = int(np.sum((labels == 1) & (truth == 0)))
    tn = int(np.sum((labels == 0) & (truth == 0)))
    fn = int(np.sum((labels == 0) & (truth == 1)))
    class1 = ClassMetrics(
        precision=_rate(tp, tp + fp),
        recall=_rate(tp, tp + fn),
        specificity=_rate(tn, tn + fp),
    )
    # Class 0 treats 0 as the positive label: swap the roles of the counts.
    class0 = ClassMetrics(
        precision=_rate(tn, tn + fn),
        recall=_rate(tn, tn + fp),
        specificity=_rate(tp, tp + fn),
    )
    return MetricsReport(
        tp=tp, fp=fp, tn=tn, fn=fn, class0=class0, class1=class1, threshold=threshold
    )

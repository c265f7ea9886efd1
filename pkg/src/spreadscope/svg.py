"""Minimal SVG chart emitter: scatter, polyline, horizontal bars.

Figures are conveniences; the CSVs next to them are the artifacts of record.
Output is deterministic (fixed precision, no timestamps, no randomness) so
re-runs are byte-identical.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_FONT = "font-family='monospace' font-size='11'"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _span(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:  # avoid a zero-width axis
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class Figure:
    """Fixed-size canvas with one data-space to pixel-space mapping."""

    def __init__(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        title: str = "",
        xlabel: str = "",
        ylabel: str = "",
        width: int = 640,
        height: int = 400,
    ):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.size == 0 or ys.size == 0:
            raise ValueError("figure needs at least one data point")
        self.width, self.height = width, height
        self.margin = 52
        self.x_lo, self.x_hi = _span(xs)
        self.y_lo, self.y_hi = _span(ys)
        self.parts: list[str] = []
        self._frame(title, xlabel, ylabel)

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return self.margin + frac * (self.width - 2 * self.margin)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return self.height - self.margin - frac * (self.height - 2 * self.margin)

    def _frame(self, title: str, xlabel: str, ylabel: str) -> None:
        m, w, h = self.margin, self.width, self.height
        self.parts.append(
            f"<rect x='{m}' y='{m}' width='{w - 2 * m}' height='{h - 2 * m}' "
            "fill='none' stroke='#888' stroke-width='1'/>"
        )
        if title:
            self.parts.append(
                f"<text x='{w // 2}' y='{m - 16}' text-anchor='middle' "
                f"{_FONT}>{escape(title)}</text>"
            )
        if xlabel:
            self.parts.append(
                f"<text x='{w // 2}' y='{h - 8}' text-anchor='middle' "
                f"{_FONT}>{escape(xlabel)}</text>"
            )
        if ylabel:
            self.parts.append(
                f"<text x='12' y='{h // 2}' text-anchor='middle' "
                f"transform='rotate(-90 12 {h // 2})' {_FONT}>{escape(ylabel)}</text>"
            )
        for value, anchor, x, y in (
            (self.x_lo, "start", m, h - m + 14),
            (self.x_hi, "end", w - m, h - m + 14),
        ):
            self.parts.append(
                f"<text x='{x}' y='{y}' text-anchor='{anchor}' "
                f"{_FONT}>{_fmt(value)}</text>"
            )
        for value, y in ((self.y_lo, h - m), (self.y_hi, m + 8)):
            self.parts.append(
                f"<text x='{m - 4}' y='{y}' text-anchor='end' "
                f"{_FONT}>{_fmt(value)}</text>"
            )

    def scatter(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        shade: np.ndarray | None = None,
        radius: float = 2.5,
    ) -> None:
        """Points, optionally shaded light-to-dark by a [0, 1] value."""
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        if xs.shape != ys.shape:
            raise ValueError("scatter arrays must have equal length")
        if shade is not None and np.asarray(shade).shape != xs.shape:
            raise ValueError("shade array must match point count")
        for i in range(len(xs)):
            if shade is None:
                color = "#1f6fb2"
            else:
                level = int(round(208 * (1.0 - float(shade[i]))))
                color = f"rgb({level},{level},{level})"
            self.parts.append(
                f"<circle cx='{_fmt(self.px(xs[i]))}' cy='{_fmt(self.py(ys[i]))}' "
                f"r='{radius}' fill='{color}' fill-opacity='0.8'/>"
            )

    def polyline(self, xs: np.ndarray, ys: np.ndarray, color: str = "#c23b22") -> None:
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        if xs.shape != ys.shape or xs.size == 0:
            raise ValueError("polyline arrays must be nonempty and equal length")
        points = " ".join(
            f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys)
        )
        self.parts.append(
            f"<polyline points='{points}' fill='none' stroke='{color}' "
            "stroke-width='1.5'/>"
        )

    def to_svg(self) -> str:
        body = "\n".join(self.parts)
        return (
            f"<svg xmlns='http://www.w3.org/2000/svg' width='{self.width}' "
            f"height='{self.height}' viewBox='0 0 {self.width} {self.height}'>\n"
            f"<rect width='{self.width}' height='{self.height}' fill='white'/>\n"
            f"{body}\n</svg>\n"
        )


def bar_chart(labels: list[str], values: np.ndarray, title: str = "") -> str:
    """Horizontal bar chart, one row per label, widths scaled to the max."""
    values = np.asarray(values, dtype=float)
    if len(labels) != len(values) or len(labels) == 0:
        raise ValueError("labels and values must be nonempty and equal length")
    if np.any(values < 0):
        raise ValueError("bar values must be nonnegative")
    row_h, left, right, top = 18, 110, 30, 40
    width = 640
    height = top + row_h * len(labels) + 20
    peak = float(values.max()) or 1.0
    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' "
        f"height='{height}' viewBox='0 0 {width} {height}'>",
        f"<rect width='{width}' height='{height}' fill='white'/>",
    ]
    if title:
        parts.append(
            f"<text x='{width // 2}' y='24' text-anchor='middle' "
            f"{_FONT}>{escape(title)}</text>"
        )
    for i, (label, value) in enumerate(zip(labels, values)):
        y = top + i * row_h
        bar = (width - left - right) * float(value) / peak
        parts.append(
            f"<text x='{left - 6}' y='{y + 12}' text-anchor='end' "
            f"{_FONT}>{escape(label)}</text>"
        )
        parts.append(
            f"<rect x='{left}' y='{y + 2}' width='{_fmt(bar)}' "
            f"height='{row_h - 6}' fill='#1f6fb2'/>"
        )
        parts.append(
            f"<text x='{_fmt(left + bar + 4)}' y='{y + 12}' "
            f"{_FONT}>{value:.4f}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_chart(
    xs: np.ndarray,
    ys: np.ndarray,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    shade: np.ndarray | None = None,
    line: tuple[np.ndarray, np.ndarray] | None = None,
) -> str:
    """Scatter with optional shading and one optional overlay polyline."""
    if line is not None:
        all_x = np.concatenate([np.asarray(xs, float), np.asarray(line[0], float)])
        all_y = np.concatenate([np.asarray(ys, float), np.asarray(line[1], float)])
    else:
        all_x, all_y = xs, ys
    fig = Figure(all_x, all_y, title=title, xlabel=xlabel, ylabel=ylabel)
    fig.scatter(xs, ys, shade=shade)
    if line is not None:
        fig.polyline(line[0], line[1])
    return fig.to_svg()


def summary_chart(
    features: list[str],
    phi_rows: list[np.ndarray],
    shade_rows: list[np.ndarray],
    title: str = "",
) -> str:
    """One shaded scatter row per feature, sharing the attribution axis."""
    if not features or not len(features) == len(phi_rows) == len(shade_rows):
        raise ValueError("features, phi_rows, and shade_rows must align")
    all_phi = np.concatenate([np.asarray(p, float) for p in phi_rows])
    rows = np.arange(len(features), dtype=float)
    fig = Figure(all_phi, rows, title=title, xlabel="attribution")
    for i, (phi, shade) in enumerate(zip(phi_rows, shade_rows)):
        y = len(features) - 1 - i  # first feature on top
        fig.scatter(
            np.asarray(phi, float),
            np.full(len(phi), float(y)),
            shade=np.asarray(shade, float),
            radius=2.0,
        )
        fig.parts.append(
            f"<text x='{fig.margin - 4}' y='{_fmt(fig.py(y) + 4)}' "
            f"text-anchor='end' {_FONT}>{escape(features[i])}</text>"
        )
    return fig.to_svg()

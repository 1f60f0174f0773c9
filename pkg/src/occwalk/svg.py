"""Plain SVG line charts for occupation-time distributions.

The output is a fixed 800x500 canvas with linear axes, numeric tick
labels and one ``<polyline>`` per series.  Coordinates are printed with
a fixed number of decimals so that identical data give identical bytes.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import InvalidConfigError

__all__ = ["Series", "Frame", "line_chart", "WIDTH", "HEIGHT"]

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 50
PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555")


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    step: bool = False


@dataclass(frozen=True)
class Frame:
    """Maps data coordinates to canvas pixels."""

    ymax: float

    @property
    def plot_width(self) -> float:
        return WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    @property
    def plot_height(self) -> float:
        return HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(self, x: float) -> float:
        return MARGIN_LEFT + x * self.plot_width

    def py(self, y: float) -> float:
        return HEIGHT - MARGIN_BOTTOM - (y / self.ymax) * self.plot_height

    def data_x(self, px: float) -> float:
        return (px - MARGIN_LEFT) / self.plot_width

    def data_y(self, py: float) -> float:
        return (HEIGHT - MARGIN_BOTTOM - py) / self.plot_height * self.ymax


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    exp = np.floor(np.log10(v))
    for m in (1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0):
        if m * 10**exp >= v:
            return float(m * 10**exp)
    return float(10 ** (exp + 1))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _points(frame: Frame, s: Series) -> str:
    xs, ys = np.asarray(s.x, float), np.asarray(s.y, float)
    pts = []
    if s.step:
        prev = 0.0
        for x, y in zip(xs, ys):
            pts.append((x, prev))
            pts.append((x, y))
            prev = y
        pts.append((1.0, prev))
    else:
        pts = list(zip(xs, ys))
    return " ".join(f"{_fmt(frame.px(x))},{_fmt(frame.py(y))}" for x, y in pts)


def line_chart(
    series: Sequence[Series],
    *,
    title: str,
    y_label: str,
    metadata: dict[str, str],
    ymax: float | None = None,
) -> str:
    """Render ``series`` over ``x`` in ``[0, 1]``."""
    if not series:
        raise InvalidConfigError("nothing to plot")
    top = max(float(np.max(s.y)) if len(s.y) else 0.0 for s in series)
    frame = Frame(ymax if ymax is not None else _nice_max(top * 1.05))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}"'
        + "".join(f" data-{k}={quoteattr(v)}" for k, v in sorted(metadata.items()))
        + ">",
        "<metadata>"
        + "".join(f"<entry key={quoteattr(k)}>{escape(v)}</entry>" for k, v in sorted(metadata.items()))
        + "</metadata>",
        f"<title>{escape(title)}</title>",
        '<rect x="0" y="0" width="800" height="500" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{escape(title)}</text>',
    ]
    x0, x1 = frame.px(0.0), frame.px(1.0)
    y0, y1 = frame.py(0.0), frame.py(frame.ymax)
    out.append(
        f'<path d="M{_fmt(x0)},{_fmt(y1)} V{_fmt(y0)} H{_fmt(x1)}" stroke="black" fill="none" class="axes"/>'
    )
    for i in range(5):
        xv = i / 4
        out.append(
            f'<text x="{_fmt(frame.px(xv))}" y="{_fmt(y0 + 18)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_tick_label(xv)}</text>'
        )
        yv = frame.ymax * i / 4
        out.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(frame.py(yv) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{_tick_label(yv)}</text>'
        )
    out.append(
        f'<text x="{_fmt((x0 + x1) / 2)}" y="{HEIGHT - 10}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13">r/n</text>'
    )
    out.append(
        f'<text x="16" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 16 {_fmt((y0 + y1) / 2)})">{escape(y_label)}</text>'
    )
    for i, s in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        out.append(
            f'<polyline class="series" data-label={quoteattr(s.label)} fill="none" '
            f'stroke="{colour}" stroke-width="1.5" points="{_points(frame, s)}"/>'
        )
        out.append(
            f'<text x="{_fmt(x1 - 4)}" y="{_fmt(y1 + 16 * (i + 1))}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12" fill="{colour}">{escape(s.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"

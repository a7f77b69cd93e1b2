"""Minimal standalone SVG charts: scatter plots and line charts.

Output is byte-deterministic for identical input.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 30, 40, 60
POINT_RADIUS = 3
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick values covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("tick range must be finite")
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step + 1e-9) * step
    ticks = []
    k = 0
    while True:
        t = first + k * step
        if t > hi + step * 1e-9 and ticks and ticks[-1] >= hi - step * 1e-9:
            break
        ticks.append(round(t, 12) + 0.0)
        k += 1
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.6g}"


@dataclass
class _Frame:
    x_ticks: list[float]
    y_ticks: list[float]

    @property
    def x_range(self) -> tuple[float, float]:
        return self.x_ticks[0], self.x_ticks[-1]

    @property
    def y_range(self) -> tuple[float, float]:
        return self.y_ticks[0], self.y_ticks[-1]

    def px(self, x: float) -> float:
        lo, hi = self.x_range
        return MARGIN_LEFT + (x - lo) / (hi - lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        lo, hi = self.y_range
        return HEIGHT - MARGIN_BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def _frame(xs: Sequence[float], ys: Sequence[float], x_range=None, y_range=None) -> _Frame:
    def span(values, fixed):
        if fixed is not None:
            return fixed
        if not values:
            return (0.0, 1.0)
        return (min(values), max(values))
    return _Frame(nice_ticks(*span(xs, x_range)), nice_ticks(*span(ys, y_range)))


def _axes(f: _Frame, title: str, x_label: str, y_label: str) -> list[str]:
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    out = [
        f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for t in f.x_ticks:
        x = _fmt(f.px(t))
        out.append(f'<line x1="{x}" y1="{bottom}" x2="{x}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{bottom + 20}" text-anchor="middle" font-size="12">{_label(t)}</text>')
    for t in f.y_ticks:
        y = _fmt(f.py(t))
        out.append(f'<line x1="{left - 5}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y}" text-anchor="end" dominant-baseline="middle" font-size="12">{_label(t)}</text>')
    out.append(f'<text x="{(left + right) / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">{escape(x_label)}</text>')
    cy = (top + bottom) / 2
    out.append(f'<text x="18" y="{cy:.2f}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {cy:.2f})">{escape(y_label)}</text>')
    return out


def _document(body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">\n'
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


@dataclass
class SvgScatter:
    points: list[tuple[float, float, str]] = field(default_factory=list)
    x_label: str = "x"
    y_label: str = "y"
    title: str = ""
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None

    def render(self) -> str:
        f = _frame([p[0] for p in self.points], [p[1] for p in self.points], self.x_range, self.y_range)
        body = _axes(f, self.title, self.x_label, self.y_label)
        body.append('<g class="points" fill="#1f77b4" fill-opacity="0.7">')
        for x, y, label in self.points:
            circle = f'<circle cx="{_fmt(f.px(x))}" cy="{_fmt(f.py(y))}" r="{POINT_RADIUS}"'
            if label:
                body.append(f"{circle}><title>{escape(label)}</title></circle>")
            else:
                body.append(f"{circle}/>")
        body.append("</g>")
        return _document(body)


@dataclass
class SvgLines:
    """Polylines, one per named series, with an optional dashed diagonal."""

    series: list[tuple[str, Sequence[float], Sequence[float]]] = field(default_factory=list)
    x_label: str = "x"
    y_label: str = "y"
    title: str = ""
    diagonal: bool = False
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None

    def render(self) -> str:
        xs = [x for _, sx, _ in self.series for x in sx]
        ys = [y for _, _, sy in self.series for y in sy]
        f = _frame(xs, ys, self.x_range, self.y_range)
        body = _axes(f, self.title, self.x_label, self.y_label)
        if self.diagonal:
            (x0, x1), (y0, y1) = f.x_range, f.y_range
            lo, hi = max(x0, y0), min(x1, y1)
            body.append(f'<line x1="{_fmt(f.px(lo))}" y1="{_fmt(f.py(lo))}" x2="{_fmt(f.px(hi))}" '
                        f'y2="{_fmt(f.py(hi))}" stroke="gray" stroke-dasharray="4 4"/>')
        for k, (name, sx, sy) in enumerate(self.series):
            color = PALETTE[k % len(PALETTE)]
            pts = " ".join(f"{_fmt(f.px(x))},{_fmt(f.py(y))}" for x, y in zip(sx, sy))
            body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}">'
                        f"<title>{escape(name)}</title></polyline>")
            ly = MARGIN_TOP + 10 + 18 * k
            body.append(f'<text x="{MARGIN_LEFT + 12}" y="{ly}" font-size="12" fill="{color}">{escape(name)}</text>')
        return _document(body)


def emit_svg(chart: SvgScatter | SvgLines, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(chart.render())


def emit_svg_scatter(s: SvgScatter, path: str | os.PathLike) -> None:
    emit_svg(s, path)

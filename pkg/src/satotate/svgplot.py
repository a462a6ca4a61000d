"""Minimal SVG emission for the CLI: line plots and scatter plots.

Plain polyline/circle primitives with a box frame and tick labels, no
plotting dependency.  Output is deterministic for given data.
"""

from __future__ import annotations

import math

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 64, 16, 24, 44
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _scale(lo: float, hi: float, span: int, offset: int):
    if hi <= lo:
        hi = lo + 1.0
    k = span / (hi - lo)

    def to_px(v: float) -> float:
        return offset + (v - lo) * k
    return to_px


def _frame(title: str, xlabel: str, ylabel: str,
           xlo: float, xhi: float, ylo: float, yhi: float) -> tuple[list[str], object, object]:
    fx = _scale(xlo, xhi, _W - _ML - _MR, _ML)
    fy_raw = _scale(ylo, yhi, _H - _MT - _MB, 0)

    def fy(v: float) -> float:
        return _H - _MB - fy_raw(v)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="16" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_H / 2:.1f})">{ylabel}</text>',
    ]
    for i in range(5):
        xv = xlo + (xhi - xlo) * i / 4
        yv = ylo + (yhi - ylo) * i / 4
        parts.append(f'<line x1="{fx(xv):.1f}" y1="{_H - _MB}" x2="{fx(xv):.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{fx(xv):.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
                     f'font-size="10">{xv:.4g}</text>')
        parts.append(f'<line x1="{_ML - 5}" y1="{fy(yv):.1f}" x2="{_ML}" '
                     f'y2="{fy(yv):.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{fy(yv) + 3:.1f}" text-anchor="end" '
                     f'font-size="10">{yv:.4g}</text>')
    return parts, fx, fy


def _bounds(values) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        hi = lo + 1.0
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(path, xs, series: dict, title: str, xlabel: str, ylabel: str) -> None:
    """Write a line plot; series maps label -> sequence of y values."""
    xlo, xhi = _bounds(xs)
    ylo, yhi = _bounds([v for ys in series.values() for v in ys])
    parts, fx, fy = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    for i, (label, ys) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{fx(x):.2f},{fy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 14 * i}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    _write(path, parts)


def scatter_plot(path, groups: dict, title: str, xlabel: str, ylabel: str) -> None:
    """Write a scatter plot; groups maps label -> (xs, ys)."""
    all_x = [x for xs, _ in groups.values() for x in xs]
    all_y = [y for _, ys in groups.values() for y in ys]
    xlo, xhi = _bounds(all_x)
    ylo, yhi = _bounds(all_y)
    parts, fx, fy = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    for i, (label, (xs, ys)) in enumerate(groups.items()):
        color = _COLORS[i % len(_COLORS)]
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{fx(x):.2f}" cy="{fy(y):.2f}" r="2" fill="{color}"/>')
        parts.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 14 * i}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")

"""Minimal native SVG line charts.

Produces a self-contained polyline chart (axes, ticks, legend) without any
plotting dependency.  Output is a deterministic function of the inputs, so
charts can sit next to CSV files under byte-identical reproducibility checks.
"""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f")

_W, _H = 880, 560
_ML, _MR, _MT, _MB = 72, 24, 48, 56   # margins: left, right, top, bottom


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def line_chart(series, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """SVG text for line series given as (name, xs, ys) triples."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)
           if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        raise ValueError("invalid-input: no finite points to plot")
    x_lo = min(p[0] for p in pts)
    x_hi = max(p[0] for p in pts)
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo -= y_pad
    y_hi += y_pad

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="13">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>']
    if title:
        out.append(f'<text x="{_W / 2:.1f}" y="26" text-anchor="middle" '
                   f'font-size="16">{title}</text>')

    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
               f'height="{_H - _MT - _MB}" fill="none" stroke="#333"/>')
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{_H - _MB}" x2="{x:.2f}" '
                   f'y2="{_H - _MB + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{_H - _MB + 20}" '
                   f'text-anchor="middle">{t:.6g}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        out.append(f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" '
                   f'y2="{y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{_ML - 9}" y="{y + 4:.2f}" '
                   f'text-anchor="end">{t:.6g}</text>')
    if xlabel:
        out.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{(_MT + _H - _MB) / 2:.1f}" '
                   f'text-anchor="middle" '
                   f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2:.1f})">'
                   f'{ylabel}</text>')

    for i, (name, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys)
                          if math.isfinite(x) and math.isfinite(y))
        out.append(f'<polyline points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="1.8"/>')
        ly = _MT + 18 + 18 * i
        out.append(f'<line x1="{_W - _MR - 150}" y1="{ly - 4}" '
                   f'x2="{_W - _MR - 122}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{_W - _MR - 116}" y="{ly}">{name}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path, series, title: str = "", xlabel: str = "",
                     ylabel: str = "") -> None:
    text = line_chart(series, title=title, xlabel=xlabel, ylabel=ylabel)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)

"""Minimal log-log SVG envelope plots (min/max band plus median line)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 60


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def envelope_svg(series: dict, title: str, ylabel: str) -> str:
    """``series`` maps a label to ``(iters, lo, med, hi)`` arrays.

    Non-positive and non-finite samples are left out, as they have no place
    on a log axis.
    """
    pts = []
    for it, lo, med, hi in series.values():
        for arr in (lo, med, hi):
            ok = np.isfinite(arr) & (arr > 0) & (it > 0)
            pts.append((np.asarray(it)[ok], np.asarray(arr)[ok]))
    xs = np.concatenate([p[0] for p in pts]) if pts else np.array([])
    ys = np.concatenate([p[1] for p in pts]) if pts else np.array([])
    if xs.size == 0:
        x0, x1, y0, y1 = 0, 1, 0, 1
    else:
        x0, x1 = math.floor(math.log10(xs.min())), math.ceil(math.log10(xs.max()))
        y0, y1 = math.floor(math.log10(ys.min())), math.ceil(math.log10(ys.max()))
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (math.log10(v) - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + (y1 - math.log10(v)) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{LEFT + pw / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']
    ystep = max(1, math.ceil((y1 - y0) / 12))
    for e in range(x0, x1 + 1):
        x = LEFT + (e - x0) / (x1 - x0) * pw
        out.append(f'<line x1="{_fmt(x)}" y1="{TOP}" x2="{_fmt(x)}" y2="{TOP + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1, ystep):
        y = TOP + (y1 - e) / (y1 - y0) * ph
        out.append(f'<line x1="{LEFT}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">iteration k</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, (it, lo, med, hi)) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        it = np.asarray(it, dtype=float)
        band = np.isfinite(lo) & np.isfinite(hi) & (lo > 0) & (hi > 0) & (it > 0)
        if np.count_nonzero(band) > 1:
            upper = [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(it[band], hi[band])]
            lower = [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(it[band][::-1], lo[band][::-1])]
            out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                       f'fill-opacity="0.2" stroke="none"/>')
        line = np.isfinite(med) & (med > 0) & (it > 0)
        if np.count_nonzero(line) > 1:
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(it[line], med[line]))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = TOP + 14 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 12}" y1="{ly}" x2="{LEFT + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{LEFT + pw + 38}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

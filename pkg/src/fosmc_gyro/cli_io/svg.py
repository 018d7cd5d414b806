"""Minimal static SVG line plots (stacked panels of time series)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "Panel", "render_panels", "write_panels"]

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")

WIDTH = 800
PANEL_H = 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 40


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


@dataclass
class Panel:
    title: str
    ylabel: str
    series: Sequence[Series] = field(default_factory=list)
    xlabel: str = "t"


def _decimate(x: np.ndarray, y: np.ndarray, max_points: int) -> tuple[np.ndarray, np.ndarray]:
    # Keep the min and max of each bucket so fast oscillations stay visible.
    n = len(x)
    if n <= max_points:
        return x, y
    buckets = max_points // 2
    edges = np.linspace(0, n, buckets + 1).astype(int)
    idx = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        idx.extend(sorted((i, j)) if i != j else (i,))
    idx = np.array(idx)
    return x[idx], y[idx]


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _panel_svg(panel: Panel, y0: float, max_points: int) -> list[str]:
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B
    top = y0 + MARGIN_T
    xs = [np.asarray(s.x, float) for s in panel.series]
    ys = [np.asarray(s.y, float) for s in panel.series]
    fin = [v[np.isfinite(v)] for v in ys]
    xmin = min(float(v.min()) for v in xs)
    xmax = max(float(v.max()) for v in xs)
    ymin = min((float(v.min()) for v in fin if v.size), default=0.0)
    ymax = max((float(v.max()) for v in fin if v.size), default=1.0)
    if ymax == ymin:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad
    if xmax == xmin:
        xmax = xmin + 1.0

    def px(x):
        return MARGIN_L + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return top + (ymax - y) / (ymax - ymin) * ph

    out = [
        f'<text x="{WIDTH / 2:.1f}" y="{y0 + 18:.1f}" text-anchor="middle" font-size="14">{escape(panel.title)}</text>',
        f'<rect x="{MARGIN_L}" y="{top:.1f}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for tx in _ticks(xmin, xmax):
        out.append(f'<text x="{px(tx):.1f}" y="{top + ph + 15:.1f}" text-anchor="middle" font-size="10">{tx:g}</text>')
    for ty in _ticks(ymin, ymax):
        out.append(f'<line x1="{MARGIN_L}" x2="{MARGIN_L + pw}" y1="{py(ty):.1f}" y2="{py(ty):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 5}" y="{py(ty) + 3:.1f}" text-anchor="end" font-size="10">{ty:.3g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{top + ph + 32:.1f}" text-anchor="middle" font-size="12">{escape(panel.xlabel)}</text>')
    out.append(
        f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {top + ph / 2:.1f})">{escape(panel.ylabel)}</text>'
    )
    for k, (s, x, y) in enumerate(zip(panel.series, xs, ys)):
        keep = np.isfinite(y)
        xd, yd = _decimate(x[keep], y[keep], max_points)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xd, yd))
        color = COLORS[k % len(COLORS)]
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{pts}"/>')
        ly = top + 14 + 14 * k
        out.append(f'<line x1="{MARGIN_L + pw - 120}" x2="{MARGIN_L + pw - 100}" y1="{ly - 4:.1f}" y2="{ly - 4:.1f}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{MARGIN_L + pw - 95}" y="{ly:.1f}" font-size="11">{escape(s.label)}</text>')
    return out


def render_panels(panels: Sequence[Panel], max_points: int = 4000) -> str:
    if not panels or any(not p.series for p in panels):
        raise ValueError("every panel needs at least one series")
    height = PANEL_H * len(panels)
    body = []
    for i, p in enumerate(panels):
        body.extend(_panel_svg(p, i * PANEL_H, max_points))
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">\n'
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def write_panels(path, panels: Sequence[Panel], max_points: int = 4000) -> None:
    Path(path).write_text(render_panels(panels, max_points))

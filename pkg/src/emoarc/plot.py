"""Standalone SVG line charts of emotion arcs (no plotting library needed)."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .arcs import EmotionArc

__all__ = ["arc_svg", "nice_ticks"]

PALETTE = ["#d4a017", "#2e8b57", "#1f77b4", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 10))
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def arc_svg(
    arcs: Sequence[tuple[str, EmotionArc]],
    *,
    width: int = 900,
    height: int = 360,
    title: str | None = None,
) -> str:
    """One polyline per arc over shared axes, with a legend; missing points break the line."""
    if not arcs:
        raise ValueError("nothing to plot")
    margin_l, margin_r, margin_t, margin_b = 60, 20, 36 if title else 16, 40
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    xs = np.concatenate([a.positions for _, a in arcs]).astype(float)
    ys = np.concatenate([a.values[a.present] for _, a in arcs])
    if ys.size == 0:
        raise ValueError("arcs have no present points")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return margin_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return margin_t + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(
        f'<path d="M{margin_l},{margin_t} V{margin_t + ph} H{margin_l + pw}" fill="none" stroke="black"/>'
    )
    for t in nice_ticks(y0, y1):
        y = sy(t)
        out.append(f'<line x1="{margin_l - 4}" y1="{y:.2f}" x2="{margin_l + pw}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{margin_l - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    for t in nice_ticks(x0, x1):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{margin_t + ph}" x2="{x:.2f}" y2="{margin_t + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{margin_t + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
    out.append(
        f'<text x="{margin_l + pw / 2:.1f}" y="{height - 6}" text-anchor="middle">position</text>'
    )

    for k, (label, arc) in enumerate(arcs):
        color = PALETTE[k % len(PALETTE)]
        segment: list[str] = []
        segments = []
        for pos, val in zip(arc.positions.tolist(), arc.values.tolist()):
            if math.isnan(val):
                if segment:
                    segments.append(segment)
                segment = []
            else:
                segment.append(f"{sx(pos):.2f},{sy(val):.2f}")
        if segment:
            segments.append(segment)
        for seg in segments:
            out.append(
                f'<polyline points="{" ".join(seg)}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = margin_t + 8 + 16 * k
        lx = margin_l + pw - 150
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

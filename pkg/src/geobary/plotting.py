"""Minimal deterministic SVG emitter for log-log scatter plots."""

from __future__ import annotations

import math
from typing import Optional, Sequence

_W, _H, _PAD = 480, 360, 48


def _ticks(lo: float, hi: float) -> list[float]:
    out = []
    k = math.floor(lo)
    while k <= math.ceil(hi):
        if lo - 0.3 <= k <= hi + 0.3:
            out.append(float(k))
        k += 1
    return out or [lo, hi]


def svg_loglog(
    points: Sequence[tuple[float, float]],
    slope: Optional[float] = None,
    intercept: Optional[float] = None,
    title: str = "",
    xlabel: str = "n",
    ylabel: str = "value",
) -> str:
    """Log10-log10 scatter with an optional fitted line and slope label."""
    pts = [(math.log10(x), math.log10(y)) for x, y in points if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing to plot: no positive points")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x0, x1 = x0 - 0.05 * (x1 - x0 + 1e-9) - 1e-3, x1 + 0.05 * (x1 - x0 + 1e-9) + 1e-3
    y0, y1 = y0 - 0.05 * (y1 - y0 + 1e-9) - 1e-3, y1 + 0.05 * (y1 - y0 + 1e-9) + 1e-3

    def px(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
    ]
    for t in _ticks(x0, x1):
        parts.append(
            f'<line x1="{px(t):.2f}" y1="{_H - _PAD}" x2="{px(t):.2f}" y2="{_PAD}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px(t):.2f}" y="{_H - _PAD + 16}" text-anchor="middle" '
            f'font-size="10">1e{t:g}</text>'
        )
    for t in _ticks(y0, y1):
        parts.append(
            f'<line x1="{_PAD}" y1="{py(t):.2f}" x2="{_W - _PAD}" y2="{py(t):.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_PAD - 6}" y="{py(t):.2f}" text-anchor="end" '
            f'font-size="10">1e{t:g}</text>'
        )
    parts.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    if slope is not None and intercept is not None:
        # the fit lives in natural-log space: log10 y = slope*log10 x + b/ln(10)
        b10 = intercept / math.log(10.0)
        parts.append(
            f'<line x1="{px(x0):.2f}" y1="{py(slope * x0 + b10):.2f}" '
            f'x2="{px(x1):.2f}" y2="{py(slope * x1 + b10):.2f}" '
            'stroke="#d62728" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_W - _PAD - 4}" y="{_PAD + 14}" text-anchor="end" '
            f'font-size="11" fill="#d62728">slope {slope:.4f}</text>'
        )
    for x, y in pts:
        parts.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="#1f77b4"/>'
        )
    parts.append(
        f'<text x="{_W / 2:.1f}" y="{_H - 8}" text-anchor="middle" font-size="11">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 14 {_H / 2:.1f})">{ylabel}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

"""Minimal self-contained SVG line plot for sweep curves.

Written by hand rather than through a plotting library so that each curve
is a single ``<polyline>`` and the reference rules are plain dashed lines,
which keeps the file small and easy to inspect or test.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .errors import InvalidParameterError

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 20, 55
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    x = first
    while x <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(x) < 1e-12 * step else x)
        x += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_svg(curves: Sequence, I_th: float, reference_level: float = 2.0 * math.pi) -> str:
    curves = [c for c in curves if len(c.points)]
    if not curves:
        raise InvalidParameterError("curves", "need at least one nonempty curve")
    xs = [pt.I_b * 1e3 for c in curves for pt in c.points] + [I_th * 1e3]
    ys = [pt.sigma_phi for c in curves for pt in c.points] + [reference_level]
    x_lo, x_hi = min(xs), max(xs)
    pad = 0.03 * (x_hi - x_lo or 1.0)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo = min(0.0, min(ys))
    y_hi = max(ys) * 1.05 if max(ys) > 0 else 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y: float) -> float:
        return MARGIN_T + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    x0, x1, y0, y1 = sx(x_lo), sx(x_hi), sy(y_lo), sy(y_hi)
    out.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
               f'fill="none" stroke="black"/>')
    for t in nice_ticks(x_lo, x_hi):
        if x_lo <= t <= x_hi:
            px = sx(t)
            out.append(f'<line x1="{px:.2f}" y1="{y0:.2f}" x2="{px:.2f}" y2="{y0 + 5:.2f}" stroke="black"/>')
            out.append(f'<text x="{px:.2f}" y="{y0 + 18:.2f}" text-anchor="middle">{_fmt(t)}</text>')
    for t in nice_ticks(y_lo, y_hi):
        if y_lo <= t <= y_hi:
            py = sy(t)
            out.append(f'<line x1="{x0 - 5:.2f}" y1="{py:.2f}" x2="{x0:.2f}" y2="{py:.2f}" stroke="black"/>')
            out.append(f'<text x="{x0 - 8:.2f}" y="{py + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">bias current I_b (mA)</text>')
    out.append(f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">phase spread sigma_phi (rad)</text>')

    # reference rules
    ry = sy(reference_level)
    out.append(f'<line x1="{x0:.2f}" y1="{ry:.2f}" x2="{x1:.2f}" y2="{ry:.2f}" stroke="gray" '
               f'stroke-dasharray="6,4"/>')
    rx = sx(I_th * 1e3)
    out.append(f'<line x1="{rx:.2f}" y1="{y0:.2f}" x2="{rx:.2f}" y2="{y1:.2f}" stroke="gray" '
               f'stroke-dasharray="6,4"/>')

    for i, c in enumerate(curves):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{sx(pt.I_b * 1e3):.2f},{sy(pt.sigma_phi):.2f}" for pt in c.points)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = WIDTH - MARGIN_R + 12
        label = f"{c.label.f_p / 1e9:g} GHz, I_p={c.label.I_p * 1e3:g} mA, chi={c.label.chi:g}"
        out.append(f'<rect x="{lx}" y="{ly - 5}" width="14" height="3" fill="{color}"/>')
        out.append(f'<text x="{lx + 18}" y="{ly}" font-size="10">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(curves: Sequence, path, I_th: float, reference_level: float = 2.0 * math.pi) -> None:
    text = render_svg(curves, I_th, reference_level)
    with open(path, "w") as fh:
        fh.write(text)

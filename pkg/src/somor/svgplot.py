"""Minimal self-contained SVG line plots (log-log) for sweep curves."""

from __future__ import annotations

import math
from pathlib import Path

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _decades(lo: float, hi: float):
    first = math.ceil(math.log10(lo) - 1e-9)
    last = math.floor(math.log10(hi) + 1e-9)
    return [10.0 ** e for e in range(first, last + 1)]


def write_line_plot(path, x, curves: dict, title: str = "", xlabel: str = "",
                    ylabel: str = "") -> None:
    """Log-log polylines; non-finite or non-positive samples are skipped."""
    series = []
    xs_all, ys_all = [], []
    for label, y in curves.items():
        pts = [(float(a), float(b)) for a, b in zip(x, y)
               if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)]
        series.append((label, pts))
        xs_all += [p[0] for p in pts]
        ys_all += [p[1] for p in pts]
    if not xs_all:
        Path(path).write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">'
            f'<text x="20" y="40">{title}: no plottable data</text></svg>\n'
        )
        return
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo / 10, x_hi * 10
    if y_lo == y_hi:
        y_lo, y_hi = y_lo / 10, y_hi * 10

    lx_lo, lx_hi = math.log10(x_lo), math.log10(x_hi)
    ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + plot_w * (math.log10(v) - lx_lo) / (lx_hi - lx_lo)

    def py(v):
        return MARGIN_T + plot_h * (1 - (math.log10(v) - ly_lo) / (ly_hi - ly_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="white" stroke="#333"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{HEIGHT / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.0f})">{ylabel}</text>',
    ]
    for t in _decades(x_lo, x_hi):
        parts.append(f'<line x1="{px(t):.1f}" y1="{MARGIN_T}" x2="{px(t):.1f}" '
                     f'y2="{MARGIN_T + plot_h}" stroke="#ddd"/>')
        parts.append(f'<text x="{px(t):.1f}" y="{MARGIN_T + plot_h + 16}" '
                     f'text-anchor="middle">1e{round(math.log10(t))}</text>')
    for t in _decades(y_lo, y_hi):
        parts.append(f'<line x1="{MARGIN_L}" y1="{py(t):.1f}" x2="{MARGIN_L + plot_w}" '
                     f'y2="{py(t):.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{py(t):.1f}" text-anchor="end" '
                     f'dominant-baseline="middle">1e{round(math.log10(t))}</text>')
    for idx, (label, pts) in enumerate(series):
        if not pts:
            continue
        color = PALETTE[idx % len(PALETTE)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        parts.append(f'<text x="{MARGIN_L + 10}" y="{MARGIN_T + 18 + 16 * idx}" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")

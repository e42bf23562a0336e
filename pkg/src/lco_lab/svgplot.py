"""Deterministic SVG line charts for run CSVs.

Fixed 800x500 canvas, linear axes auto-ranged to the data with 5% margins,
legend from series names.  Output is a pure function of the input series,
so identical data yields byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import math

WIDTH, HEIGHT = 800, 500
PLOT = (70.0, 20.0, 770.0, 450.0)  # left, top, right, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _axis_range(values: list[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    margin = 0.05 * (hi - lo)
    return lo - margin, hi + margin


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def render_chart(series: dict[str, tuple[list[float], list[float]]], x_label: str = "x") -> str:
    """SVG text for named (x, y) series; axes alone when there is no data."""
    left, top, right, bottom = PLOT
    all_x = [x for xs, _ in series.values() for x in xs]
    all_y = [y for _, ys in series.values() for y in ys if math.isfinite(y)]
    x_lo, x_hi = _axis_range(all_x)
    y_lo, y_hi = _axis_range(all_y)

    def sx(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * (right - left)

    def sy(y: float) -> float:
        return bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{left:.2f}" y1="{bottom:.2f}" x2="{right:.2f}" y2="{bottom:.2f}" '
        f'stroke="black" stroke-width="1"/>',
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" y2="{bottom:.2f}" '
        f'stroke="black" stroke-width="1"/>',
        f'<text x="{left:.2f}" y="{bottom + 28:.2f}" font-size="12">{_fmt(x_lo)}</text>',
        f'<text x="{right - 40:.2f}" y="{bottom + 28:.2f}" font-size="12">{_fmt(x_hi)}</text>',
        f'<text x="{left - 62:.2f}" y="{bottom:.2f}" font-size="12">{_fmt(y_lo)}</text>',
        f'<text x="{left - 62:.2f}" y="{top + 10:.2f}" font-size="12">{_fmt(y_hi)}</text>',
        f'<text x="{(left + right) / 2:.2f}" y="{bottom + 28:.2f}" font-size="12">{x_label}</text>',
    ]

    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y)
        )
        if points:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
            )
        legend_y = top + 16 + 16 * i
        parts.append(
            f'<rect x="{right - 170:.2f}" y="{legend_y - 9:.2f}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{right - 155:.2f}" y="{legend_y:.2f}" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_chart(path: str | Path, series, x_label: str = "x") -> None:
    Path(path).write_text(render_chart(series, x_label))

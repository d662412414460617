"""Minimal standalone SVG emitters (no plotting dependency)."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#7f7f7f")


def line_chart(series: Mapping[str, Sequence[tuple[float, float]]],
               title: str = "", log_x: bool = False,
               width: int = 640, height: int = 420) -> str:
    """Polyline chart of named (x, y) series."""
    pad = 50
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    if not xs:
        raise ValueError("no data")

    def tx(x):
        if log_x:
            lo, hi = math.log10(min(xs)), math.log10(max(max(xs), min(xs) * 10))
            f = (math.log10(x) - lo) / (hi - lo)
        else:
            lo, hi = min(xs), max(max(xs), min(xs) + 1e-12)
            f = (x - lo) / (hi - lo)
        return pad + f * (width - 2 * pad)

    y_lo, y_hi = min(ys), max(max(ys), min(ys) + 1e-12)

    def ty(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
             f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="black"/>']
    for idx, (name, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{tx(x):.1f},{ty(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width-pad+4}" y="{pad+14*idx}" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def heatmap(matrix: np.ndarray, title: str = "", cell: int = 28) -> str:
    """Grid heatmap shaded by magnitude (white = 0, dark blue = max)."""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    top = 30
    width = cols * cell + 60
    height = rows * cell + top + 20
    peak = matrix.max() if matrix.size and matrix.max() > 0 else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width/2}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    for r in range(rows):
        for c in range(cols):
            shade = matrix[r, c] / peak
            blue = int(255 - 175 * shade)
            red_green = int(255 - 225 * shade)
            parts.append(
                f'<rect x="{30 + c*cell}" y="{top + r*cell}" width="{cell-1}" '
                f'height="{cell-1}" fill="rgb({red_green},{red_green},{blue})"/>')
    parts.append("</svg>")
    return "\n".join(parts)

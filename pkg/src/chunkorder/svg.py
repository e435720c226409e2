"""Dependency-free SVG figures: transition heatmap and projection scatter.

Output is built from fixed-format strings so reruns are byte-identical.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .corpus import FC_LABELS
from .sequences import TransitionMatrix

_LOW = (247, 251, 255)
_HIGH = (8, 48, 107)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _blend(t: float) -> str:
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(_LOW, _HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(tm: TransitionMatrix, title: str = "FC transition probabilities", cell: int = 56) -> str:
    labels = [lab.value for lab in FC_LABELS]
    left, top = 110, 90
    n = len(labels)
    width, height = left + n * cell + 20, top + n * cell + 40
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{left + n * cell // 2}" y="{top - 50}" text-anchor="middle">to</text>',
        f'<text x="20" y="{top + n * cell // 2}" text-anchor="middle" transform="rotate(-90 20 {top + n * cell // 2})">from</text>',
    ]
    for j, name in enumerate(labels):
        x = left + j * cell + cell // 2
        out.append(f'<text x="{x}" y="{top - 8}" text-anchor="end" transform="rotate(-45 {x} {top - 8})">{name}</text>')
    probs = tm.exact_probs()
    totals = tm.row_totals
    for i, name in enumerate(labels):
        y = top + i * cell
        out.append(f'<text x="{left - 6}" y="{y + cell // 2 + 4}" text-anchor="end">{name}</text>')
        for j in range(n):
            x = left + j * cell
            if totals[i] == 0:
                fill, label, ink = "#e0e0e0", "n/a", "#666666"
            else:
                p = float(probs[i][j])
                fill = _blend(p)
                label = f"{p:.2f}"
                ink = "#ffffff" if p > 0.5 else "#000000"
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#ffffff"/>')
            out.append(f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" text-anchor="middle" fill="{ink}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_svg(points, title: str = "2-D projection", size: int = 420) -> str:
    """``points`` is a list of ``(id, x, y, group)``; colors follow sorted group names."""
    groups = sorted({g for *_, g in points})
    color = {g: _PALETTE[i % len(_PALETTE)] for i, g in enumerate(groups)}
    pad = 40
    xs = [p[1] for p in points] or [0.0]
    ys = [p[2] for p in points] or [0.0]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    xspan = (xhi - xlo) or 1.0
    yspan = (yhi - ylo) or 1.0
    legend_w = 140
    width, height = size + legend_w, size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{size // 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" fill="none" stroke="#999999"/>',
    ]
    inner = size - 2 * pad
    for eid, x, y, g in points:
        cx = pad + (x - xlo) / xspan * inner
        cy = size - pad - (y - ylo) / yspan * inner
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="{color[g]}"><title>{escape(eid)}</title></circle>')
    for k, g in enumerate(groups):
        y = pad + k * 18
        out.append(f'<rect x="{size + 5}" y="{y}" width="10" height="10" fill="{color[g]}"/>')
        out.append(f'<text x="{size + 20}" y="{y + 9}">{escape(g)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

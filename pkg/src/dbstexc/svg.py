"""Minimal static SVG renderings: a cluster map and a line plot.

No plotting library is involved; the output is plain SVG text with a fixed
viewport, so identical inputs give identical bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

SIZE = 600
MARGIN = 20
RELEVANT = "#d62728"
IRRELEVANT = "#9e9e9e"
HULL = "#1f77b4"


def _num(v: float) -> str:
    return f"{v:.2f}"


def _header(width, height, title):
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def cluster_map(relevant_xy, irrelevant_xy, shapes, center, radius, title="clusters") -> str:
    """Scatter of relevant/irrelevant points with cluster outlines.

    Parameters
    ----------
    relevant_xy, irrelevant_xy : ndarray
        Planar coordinates in metres.
    shapes : iterable
        ``(kind, shape)`` pairs as produced by
        :func:`dbstexc.evaluation.cluster_shapes` (hull vertex array, or
        ``(cx, cy, r)`` for a disk).
    center, radius
        Query region in planar metres; it fixes the viewport.
    """
    cx, cy = center
    scale = (SIZE - 2 * MARGIN) / (2.0 * radius)

    def tx(x):
        return MARGIN + (x - cx + radius) * scale

    def ty(y):
        # svg y grows downwards
        return MARGIN + (cy + radius - y) * scale

    out = _header(SIZE, SIZE, title)
    out.append(
        f'<circle cx="{_num(tx(cx))}" cy="{_num(ty(cy))}" r="{_num(radius * scale)}" '
        'fill="none" stroke="black" stroke-dasharray="4 4"/>'
    )
    for xy, color in ((irrelevant_xy, IRRELEVANT), (relevant_xy, RELEVANT)):
        out.append(f'<g fill="{color}">')
        for x, y in np.asarray(xy, dtype=float).reshape(-1, 2):
            out.append(f'<circle cx="{_num(tx(x))}" cy="{_num(ty(y))}" r="1.5"/>')
        out.append("</g>")
    out.append(f'<g fill="{HULL}" fill-opacity="0.15" stroke="{HULL}" stroke-width="1.5">')
    for kind, shape in shapes:
        if kind == "hull":
            pts = " ".join(f"{_num(tx(x))},{_num(ty(y))}" for x, y in shape)
            out.append(f'<polygon points="{pts}"/>')
        else:
            x, y, r = shape
            out.append(f'<circle cx="{_num(tx(x))}" cy="{_num(ty(y))}" r="{_num(r * scale)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_plot(xs, ys, title="", xlabel="", ylabel="") -> str:
    """Polyline of ``ys`` against ``xs`` with the axis ranges written as labels."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    w, h, pad = 640, 400, 50
    out = _header(w, h, title)
    out.append(f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>')
    out.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>')
    if len(xs):
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        sx = (w - 2 * pad) / (x1 - x0) if x1 > x0 else 0.0
        sy = (h - 2 * pad) / (y1 - y0) if y1 > y0 else 0.0
        pts = " ".join(f"{_num(pad + (x - x0) * sx)},{_num(h - pad - (y - y0) * sy)}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{HULL}" stroke-width="1.5"/>')
        out.append(f'<text x="{pad}" y="{h - pad + 16}" font-size="11">{x0:g}</text>')
        out.append(f'<text x="{w - pad}" y="{h - pad + 16}" font-size="11" text-anchor="end">{x1:g}</text>')
        out.append(f'<text x="{pad - 4}" y="{h - pad}" font-size="11" text-anchor="end">{y0:.4g}</text>')
        out.append(f'<text x="{pad - 4}" y="{pad + 4}" font-size="11" text-anchor="end">{y1:.4g}</text>')
    out.append(f'<text x="{w / 2:g}" y="{h - 12}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{h / 2:g}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {h / 2:g})">{escape(ylabel)}</text>'
    )
    out.append(f'<text x="{w / 2:g}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

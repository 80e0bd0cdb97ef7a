"""Static SVG frames: curve outline plus a curvature heat strip."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .curve import geometry


def _color(value: float) -> str:
    # blue (low) -> white -> red (high) on [0, 1]
    v = min(max(value, 0.0), 1.0)
    if v < 0.5:
        s = v / 0.5
        r, g, b = int(255 * s), int(255 * s), 255
    else:
        s = (1.0 - v) / 0.5
        r, g, b = 255, int(255 * s), int(255 * s)
    return f"#{r:02x}{g:02x}{b:02x}"


def frame_svg(curve, title: str = "", size: int = 400, strip_height: int = 24) -> str:
    """SVG text for one curve; vertices are colored by curvature.

    The strip underneath shows curvature against the vertex index with the
    same color scale (range printed in the caption).
    """
    g = geometry(curve)
    pts = g.points
    k = g.curvature
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * size
    scale = (size - 2 * pad) / span
    xy = (pts - lo) * scale + pad
    xy[:, 1] = size - xy[:, 1]  # y up
    kmin, kmax = float(k.min()), float(k.max())
    norm = (k - kmin) / (kmax - kmin) if kmax > kmin else np.full_like(k, 0.5)
    n = len(pts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + strip_height + 24}" '
        f'viewBox="0 0 {size} {size + strip_height + 24}">',
        f'<rect width="100%" height="100%" fill="white"/>',
    ]
    path = " ".join(f"{x:.3f},{y:.3f}" for x, y in xy)
    out.append(f'<polygon points="{path}" fill="none" stroke="#333" stroke-width="1"/>')
    for (x, y), v in zip(xy, norm):
        out.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="1.5" fill="{_color(v)}"/>')
    width = size / n
    for i, v in enumerate(norm):
        out.append(
            f'<rect x="{i * width:.3f}" y="{size}" width="{width + 0.01:.3f}" height="{strip_height}" fill="{_color(v)}"/>'
        )
    caption = f"{title} k in [{kmin:.4g}, {kmax:.4g}]"
    out.append(f'<text x="4" y="{size + strip_height + 16}" font-family="monospace" font-size="12">{caption}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_frame(path, curve, title: str = "") -> None:
    Path(path).write_text(frame_svg(curve, title))

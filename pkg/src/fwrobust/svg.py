"""SVG 1.1 drawings of planar cell complexes, elementary hulls and contamination loci.

Drawing coordinates have y pointing up, matching the chart the samples live in.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .cells import ElementaryCell, Region
from .solver import WeightedSample


class _Canvas:
    def __init__(self, lo: np.ndarray, hi: np.ndarray, size: int = 480, margin: float = 0.08):
        span = float(max(hi - lo)) or 1.0
        self.lo = lo - margin * span
        self.span = span * (1 + 2 * margin)
        self.size = size
        self.items: list[str] = []

    def xy(self, p) -> tuple[float, float]:
        x = (p[0] - self.lo[0]) / self.span * self.size
        y = self.size - (p[1] - self.lo[1]) / self.span * self.size
        return round(float(x), 3), round(float(y), 3)

    def polygon(self, pts, fill: str, stroke: str = "none", width: float = 0.0) -> None:
        coords = " ".join(f"{x},{y}" for x, y in map(self.xy, pts))
        self.items.append(f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def line(self, p, q, stroke: str, width: float, dash: str | None = None) -> None:
        (x1, y1), (x2, y2) = self.xy(p), self.xy(q)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" stroke-width="{width}"{extra}/>'
        )

    def circle(self, p, r: float, fill: str, stroke: str = "black") -> None:
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>')

    def text(self, p, label: str, dx: float = 7, dy: float = -7) -> None:
        x, y = self.xy(p)
        self.items.append(
            f'<text x="{x + dx}" y="{y + dy}" font-family="sans-serif" font-size="13">{escape(label)}</text>'
        )

    def render(self) -> str:
        body = "\n  ".join(self.items)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.size}" height="{self.size}" '
            f'viewBox="0 0 {self.size} {self.size}">\n  <rect width="100%" height="100%" fill="white"/>\n  {body}\n</svg>\n'
        )


def _label(w: float) -> str:
    return f"{w:g}"


def render_complex(
    sample: WeightedSample,
    cells: list[ElementaryCell] | None = None,
    hull: Region | None = None,
    locus: Region | None = None,
    window: tuple[np.ndarray, np.ndarray] | None = None,
) -> str:
    """Cell edges (dashed), hull in grey, locus in black, sample points white with weight labels."""
    if sample.dim != 2:
        raise ValueError("SVG output is for planar samples")
    pts = sample.points
    if window is None:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.3 * max(float(max(hi - lo)), 1.0)
        window = (lo - pad, hi + pad)
    cv = _Canvas(np.asarray(window[0], dtype=float), np.asarray(window[1], dtype=float))
    if hull is not None:
        for c in hull.cells:
            if c.dim == 2:
                cv.polygon(c.vertices, "#c8c8c8")
    if cells is not None:
        for c in cells:
            if c.dim == 1:
                cv.line(c.vertices[0], c.vertices[1], "#555555", 0.8, dash="4,3")
    if locus is not None:
        for c in locus.cells:
            if c.dim == 2:
                cv.polygon(c.vertices, "black")
            elif c.dim == 1:
                cv.line(c.vertices[0], c.vertices[1], "black", 3.5)
            else:
                cv.circle(c.vertices[0], 3.0, "black")
    for p, w in zip(pts, sample.weights):
        cv.circle(p, 6.0, "white")
        cv.text(p, _label(w))
    return cv.render()

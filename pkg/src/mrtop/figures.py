"""Contour drawings and structure-size tables for a range of k."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from mrtop.core import DataTuple
from mrtop.errors import DomainError
from mrtop.index import KPolygonIndex, build_index

STROKES = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

_SIZE = 600
_MARGIN = 40


def parse_k_range(text: str) -> list[int]:
    """``"1..4"``, ``"1-4"``, ``"2"`` or ``"1,3,5"`` -> sorted list of k."""
    text = text.strip()
    if not text:
        return []
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        for sep in ("..", "-"):
            if sep in part:
                lo, hi = part.split(sep, 1)
                out.update(range(int(lo), int(hi) + 1))
                break
        else:
            out.add(int(part))
    if any(k < 1 for k in out):
        raise DomainError("k must be positive")
    return sorted(out)


def edge_count(idx: KPolygonIndex) -> int:
    return idx.size - 1


def size_table(tuples: Sequence[DataTuple], ks: Iterable[int], tau: float = 0.5) -> list[dict]:
    rows = []
    for k in ks:
        idx = build_index(tuples, k, tau)
        rows.append({"k": k, "CH": idx.hull_size, "DS": idx.size,
                     "lines": len(idx.line_table), "edges": edge_count(idx)})
    return rows


def size_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["k", "CH", "DS", "lines", "edges"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _pts(vertices) -> str:
    return " ".join(f"{v.x!r},{v.y!r}" for v in vertices)


def contours_svg(indexes: Sequence[KPolygonIndex], hulls: bool = False) -> str:
    """Draw each k-polygon as one polyline, in data coordinates.

    A group transform maps data space onto the canvas (y up), so the
    ``points`` attributes hold the polygon vertices exactly.
    """
    if not indexes:
        raise DomainError("no contours to draw")
    extent = max(max(idx.hull[0].x, idx.hull[-1].y) for idx in indexes)
    scale = (_SIZE - 2 * _MARGIN) / extent
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_SIZE}" '
        f'height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<g id="plot" transform="translate({_MARGIN},{_SIZE - _MARGIN}) scale({scale!r},{-scale!r})">',
        f'<line class="axis" x1="0" y1="0" x2="{extent * 1.05!r}" y2="0" stroke="black" '
        'vector-effect="non-scaling-stroke"/>',
        f'<line class="axis" x1="0" y1="0" x2="0" y2="{extent * 1.05!r}" stroke="black" '
        'vector-effect="non-scaling-stroke"/>',
    ]
    for i, idx in enumerate(indexes):
        color = STROKES[i % len(STROKES)]
        out.append(f'<polyline class="contour" data-k="{idx.k}" fill="none" stroke="{color}" '
                   f'vector-effect="non-scaling-stroke" points="{_pts(idx.vertices())}"/>')
        if hulls:
            out.append(f'<polyline class="hull" data-k="{idx.k}" fill="none" stroke="{color}" '
                       'stroke-dasharray="4 3" vector-effect="non-scaling-stroke" '
                       f'points="{_pts(idx.hull)}"/>')
    out.append("</g>")
    for i, idx in enumerate(indexes):
        out.append(f'<text x="{_SIZE - 110}" y="{20 + 16 * i}" font-size="12" '
                   f'fill="{STROKES[i % len(STROKES)]}">k = {idx.k}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Answering maximal reverse top-k queries against a k-polygon index.

A query tuple ``q`` is in the top-k for direction ``theta`` exactly when its
dual line is strictly nearer the origin than the k-polygon along that ray.
So the answer is the part of the query line inside the polygon, read back as
ranges of directions.

The line is located against the convex hull by binary search; the polygon
edges hidden in the pockets behind each crossed hull edge are then scanned
directly.  A pocket can also swallow the line where the line is inside the
hull, without any hull edge being crossed.  ``strict`` mode (the default)
checks those pockets too, using each pocket's stored depth to skip the ones
the line cannot reach; ``strict=False`` scans only the pockets behind
crossed hull edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from mrtop.core import (HALF_PI, AngularInterval, DataTuple, Direction, DualLine,
                        Point, dual_transform)
from mrtop.errors import DomainError, TauMismatchError
from mrtop.index import KPolygonIndex

# endpoints closer than this (radians) are treated as shared when merging
MERGE_EPS = 1e-12


class Crossing(NamedTuple):
    direction: Direction
    point: Point
    line: object


@dataclass(frozen=True)
class MrtopResult:
    intervals: tuple[AngularInterval, ...]
    crossings: tuple[Crossing, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def contains(self, theta: float) -> bool:
        return any(iv.contains(theta) for iv in self.intervals)

    def thetas(self) -> list[tuple[float, float]]:
        return [(iv.lo.theta, iv.hi.theta) for iv in self.intervals]


@dataclass
class HullSearch:
    edges: list[int]
    above_first: bool
    above_last: bool
    visits: int


def _require_tau(idx: KPolygonIndex, lq: DualLine) -> None:
    if lq.tau != idx.tau:
        raise TauMismatchError(f"query line uses tau={lq.tau}, index uses tau={idx.tau}")


def _overrides(cx, q1, q2):
    """Exact above/below answers for vertices where float rounding would decide.

    The axis endpoints compare raw attributes; vertices lying on the query's
    own line (the query is a member of the relation) are on the line, which
    counts as inside.  Returns ``(hull positions -> above, pocket -> inner
    positions on the line)``.
    """
    n = len(cx.hx)
    hull = {0: q1 < cx.first_a1, n - 1: q2 < cx.last_a2}
    hit = cx.on_line.get((q1, q2))
    if hit is None:
        return hull, {}
    for h in hit[0]:
        hull[h] = False
    return hull, hit[1]


def _hull_edges(hx, hy, q1, q2, tau, ov):
    """Binary search for hull edges crossed by the line ``q . u = tau``.

    Along the hull, ``q . h`` rises then falls, so the vertices the line
    passes above form a prefix and a suffix.  ``ov`` maps hull positions to
    forced above/below answers.  Returns crossed edge indexes and the number
    of midpoints inspected.
    """
    def above(i):
        v = ov.get(i)
        return q1 * hx[i] + q2 * hy[i] < tau if v is None else v

    n = len(hx)
    edges = []
    visits = 0
    stack = [(0, n - 1)]
    while stack:
        s, e = stack.pop()
        if e - s == 1:
            if above(s) != above(e):
                edges.append(s)
            continue
        mid = (s + e) >> 1
        visits += 1
        fm = q1 * hx[mid] + q2 * hy[mid]
        if above(mid):
            # line above mid: follow the side where the hull rises toward it
            if q1 * hx[mid + 1] + q2 * hy[mid + 1] > fm:
                stack.append((mid, e))
            elif q1 * hx[mid - 1] + q2 * hy[mid - 1] > fm:
                stack.append((s, mid))
        else:
            if above(s):
                stack.append((s, mid))
            if above(e):
                stack.append((mid, e))
    edges.sort()
    return edges, visits


def _scan_pocket(pocket, q1, q2, tau, out, first_above, last_above, on=()):
    """Append the direction tangents where the line crosses the pocket chain.

    ``first_above``/``last_above`` are the answers for the bounding hull
    vertices; positions in ``on`` lie on the query line.
    """
    pts, owners = pocket[0], pocket[1]
    last = len(pts) - 1
    prev = first_above
    for j in range(1, last + 1):
        if j == last:
            cur = last_above
        elif j in on:
            cur = False
        else:
            x, y = pts[j]
            cur = q1 * x + q2 * y < tau
        if cur != prev:
            a1, a2 = owners[j - 1]
            den = q2 - a2
            if den != 0.0:
                t = (a1 - q1) / den
            else:  # cannot cross a parallel edge; rounding put it here
                x, y = pts[j]
                t = y / x if x > 0 else math.inf
            out.append((t if t > 0.0 else 0.0, j - 1, pocket))
        prev = cur


def _solve(cx, q1, q2, strict):
    """Raw query: inside-state at angle 0, sorted crossing records, inside at pi/2."""
    hx, hy, tau = cx.hx, cx.hy, cx.tau
    n = len(hx)
    ov, pocket_on = _overrides(cx, q1, q2)

    def above(i):
        v = ov.get(i)
        return q1 * hx[i] + q2 * hy[i] < tau if v is None else v

    edges, _ = _hull_edges(hx, hy, q1, q2, tau, ov)
    found = []
    for e in edges:
        _scan_pocket(cx.pockets[e], q1, q2, tau, found, above(e), above(e + 1),
                     pocket_on.get(e, ()))
    if strict:
        # pockets whose hull edge lies wholly above the line may still dip below it
        pockets, depth = cx.pockets, cx.depth
        prev_f = q1 * hx[0] + q2 * hy[0] - tau
        prev_in = not above(0)
        for i in range(n - 1):
            f = q1 * hx[i + 1] + q2 * hy[i + 1] - tau
            f_in = not above(i + 1)
            if (prev_in and f_in and depth[i] > 0.0
                    and min(max(prev_f, 0.0), max(f, 0.0)) <= depth[i] * q2):
                _scan_pocket(pockets[i], q1, q2, tau, found, False, False,
                             pocket_on.get(i, ()))
            prev_f, prev_in = f, f_in
    found.sort(key=lambda r: r[0])
    return not above(0), found, not above(n - 1)


def _intervals_from(inside0, ts, inside_end):
    """Pair sorted crossing tangents into (lo_t, hi_t, lo_closed, hi_closed)."""
    out = []
    state = inside0
    lo = 0.0
    lo_closed = inside0
    for t in ts:
        if state:
            if t > lo and math.atan(t) > math.atan(lo):
                out.append((lo, t, lo_closed, False))
        else:
            lo, lo_closed = t, False
        state = not state
    if state and math.atan(lo) < HALF_PI:
        out.append((lo, math.inf, lo_closed, True))
    return out


def _make_interval(lo_t, hi_t, lo_closed, hi_closed) -> AngularInterval:
    lo = Direction(0.0, 0.0) if lo_t == 0.0 else Direction(math.atan(lo_t), lo_t)
    hi = Direction(HALF_PI, math.inf) if math.isinf(hi_t) else Direction(math.atan(hi_t), hi_t)
    return AngularInterval(lo, hi, lo_closed and lo_t == 0.0, hi_closed)


def hull_search(idx: KPolygonIndex, lq: DualLine) -> HullSearch:
    _require_tau(idx, lq)
    cx = idx.compiled
    ov, _ = _overrides(cx, lq.a1, lq.a2)
    edges, visits = _hull_edges(cx.hx, cx.hy, lq.a1, lq.a2, cx.tau, ov)
    return HullSearch(edges, ov[0], ov[len(cx.hx) - 1], visits)


def _crossing(rec, q1, q2, tau) -> Crossing:
    t, j, pocket = rec
    if math.isinf(t):
        return Crossing(Direction.from_t(t), Point(0.0, tau / q2), pocket[2][j])
    x = tau / (q1 + q2 * t)
    return Crossing(Direction.from_t(t), Point(x, t * x), pocket[2][j])


def concavity_scan(idx: KPolygonIndex, edge_pos: int, lq: DualLine) -> list[Crossing]:
    """Crossings of ``lq`` with the polygon chain behind hull edge ``edge_pos``."""
    if not 0 <= edge_pos < len(idx.hull) - 1:
        raise DomainError(f"edge position {edge_pos} outside [0, {len(idx.hull) - 2}]")
    _require_tau(idx, lq)
    cx = idx.compiled
    ov, pocket_on = _overrides(cx, lq.a1, lq.a2)

    def above(i):
        v = ov.get(i)
        return lq.a1 * cx.hx[i] + lq.a2 * cx.hy[i] < cx.tau if v is None else v

    found = []
    _scan_pocket(cx.pockets[edge_pos], lq.a1, lq.a2, idx.tau, found,
                 above(edge_pos), above(edge_pos + 1), pocket_on.get(edge_pos, ()))
    return [_crossing(r, lq.a1, lq.a2, idx.tau) for r in found]


def query_line(idx: KPolygonIndex, lq: DualLine, strict: bool = True) -> MrtopResult:
    _require_tau(idx, lq)
    q1, q2 = lq.a1, lq.a2
    inside0, found, inside_end = _solve(idx.compiled, q1, q2, strict)
    raw = _intervals_from(inside0, [r[0] for r in found], inside_end)
    intervals = merge_adjacent([_make_interval(*r) for r in raw])
    crossings = tuple(_crossing(r, q1, q2, idx.tau) for r in found)
    return MrtopResult(tuple(intervals), crossings)


def mrtop_query(idx: KPolygonIndex, q: DataTuple, strict: bool = True,
                tau: float | None = None) -> MrtopResult:
    """Maximal ranges of directions in which ``q`` ranks in the top-k.

    ``tau``, when given, must match the offset the index was built with.
    """
    if tau is not None and tau != idx.tau:
        raise TauMismatchError(f"query tau={tau} but index built with tau={idx.tau}")
    return query_line(idx, dual_transform(q, idx.tau), strict)


def merge_adjacent(intervals: Sequence[AngularInterval]) -> list[AngularInterval]:
    """Coalesce overlapping or touching intervals (input sorted by ``lo``)."""
    out: list[AngularInterval] = []
    for iv in intervals:
        if out and iv.lo.theta < out[-1].lo.theta:
            raise DomainError("intervals must be sorted by their lower endpoint")
        if out and iv.lo.theta <= out[-1].hi.theta + MERGE_EPS:
            last = out[-1]
            if iv.hi.theta > last.hi.theta:
                out[-1] = AngularInterval(last.lo, iv.hi, last.lo_closed, iv.hi_closed)
            elif iv.hi.theta == last.hi.theta and iv.hi_closed and not last.hi_closed:
                out[-1] = AngularInterval(last.lo, last.hi, last.lo_closed, True)
            continue
        out.append(iv)
    return out


# -- result stream ------------------------------------------------------------

def _flags(iv: AngularInterval) -> str:
    return ("[" if iv.lo_closed else "(") + ("]" if iv.hi_closed else ")")


def format_result(qid, result: MrtopResult) -> str:
    """One result line: ``id;lo,hi[,flags];...`` with 12 significant digits."""
    parts = [str(qid)]
    for iv in result.intervals:
        s = f"{iv.lo.theta:.12g},{iv.hi.theta:.12g}"
        if iv.lo_closed or iv.hi_closed:
            s += "," + _flags(iv)
        parts.append(s)
    line = ";".join(parts)
    return line if result.intervals else line + ";"


def parse_result(line: str) -> tuple[str, list[tuple[float, float, bool, bool]]]:
    qid, _, rest = line.rstrip("\n").partition(";")
    out = []
    for chunk in filter(None, rest.split(";")):
        fields = chunk.split(",")
        lo, hi = float(fields[0]), float(fields[1])
        flags = fields[2] if len(fields) > 2 else "()"
        out.append((lo, hi, flags[0] == "[", flags[1] == "]"))
    return qid, out

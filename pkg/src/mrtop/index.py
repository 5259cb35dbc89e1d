"""The k-polygon index: radial plane sweep and the dual-array layout.

The k-polygon of a set of dual lines is traced by a ray rotating from the
positive x-axis to the positive y-axis: in every direction its boundary lies
on the k-th line met by the ray.  The sweep keeps the lines ordered by
distance along the ray and swaps neighbours at their crossings; each swap at
position ``k - 1`` is a polygon vertex.

The polygon is stored as two arrays: the vertices of its convex hull in
angular order, and, for each hull edge, the polygon vertices the edge cuts
off (the concavity, or pocket).  The hull is grown with a monotone-chain
update as vertices arrive, so both arrays come out of a single pass.
"""

from __future__ import annotations

import heapq
import json
import math
import os
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Hashable, Iterable, Sequence

from mrtop.core import GEOM_EPS, DataTuple, DualLine, Point, dual_transform
from mrtop.errors import (DomainError, GeneralPositionError, IndexFormatError,
                          InvariantViolationError, TruncatedStreamError,
                          VersionMismatchError)

FORMAT_MAGIC = b"KPLY"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class PolygonVertex:
    """A corner of the k-polygon.

    ``left_line`` owns the boundary edge on the smaller-angle side and
    ``right_line`` the edge on the larger-angle side.  The endpoint on the
    x-axis has no left line, the one on the y-axis no right line.
    """

    point: Point
    left_line: Hashable | None
    right_line: Hashable | None

    @property
    def x(self) -> float:
        return self.point[0]

    @property
    def y(self) -> float:
        return self.point[1]

    @property
    def axis(self) -> str | None:
        if self.left_line is None:
            return "x"
        if self.right_line is None:
            return "y"
        return None


@dataclass(frozen=True, eq=True)
class KPolygonIndex:
    k: int
    tau: float
    hull: tuple[PolygonVertex, ...]
    concavities: tuple[tuple[PolygonVertex, ...], ...]
    line_table: dict = field(hash=False)

    def __hash__(self):
        return id(self)

    @property
    def hull_size(self) -> int:
        return len(self.hull)

    @property
    def size(self) -> int:
        """Total number of distinct polygon vertices (the |DS| statistic)."""
        return len(self.hull) + sum(len(c) for c in self.concavities)

    def vertices(self) -> list[PolygonVertex]:
        """All polygon vertices in angular order."""
        out = [self.hull[0]]
        for i, conc in enumerate(self.concavities):
            out.extend(conc)
            out.append(self.hull[i + 1])
        return out

    def edge_lines(self) -> list[Hashable]:
        """Owner line of each polygon edge, in angular order."""
        return [v.right_line for v in self.vertices()[:-1]]

    def pocket(self, i: int) -> list[PolygonVertex]:
        """Polygon chain from ``hull[i]`` to ``hull[i + 1]`` inclusive."""
        return [self.hull[i], *self.concavities[i], self.hull[i + 1]]

    def kth_line_at(self, theta: float) -> Hashable:
        """Owner of the polygon edge crossed by the ray at ``theta``."""
        verts = self.vertices()
        for v in verts[1:-1]:
            if math.atan2(v.y, v.x) > theta:
                return v.left_line
        return verts[-1].left_line

    def radius_at(self, theta: float) -> float:
        """Distance from the origin to the polygon boundary along ``theta``."""
        line = self.line_table[self.kth_line_at(theta)]
        return line.tau / (line.a1 * math.cos(theta) + line.a2 * math.sin(theta))

    @cached_property
    def compiled(self) -> "_Compiled":
        return _Compiled(self)


class _Compiled:
    """Flat float arrays backing the query hot path."""

    __slots__ = ("hx", "hy", "pockets", "depth", "tau", "first_a1", "last_a2", "on_line")

    def __init__(self, idx: KPolygonIndex):
        self.tau = idx.tau
        self.hx = [v.x for v in idx.hull]
        self.hy = [v.y for v in idx.hull]
        lt = idx.line_table
        # exact tests for the axis endpoints: q passes above hull[0] iff q1 < first_a1
        self.first_a1 = lt[idx.hull[0].right_line].a1
        self.last_a2 = lt[idx.hull[-1].left_line].a2
        # line (a1, a2) -> (hull positions, {pocket: inner positions}) of vertices on it,
        # so a query whose own line shapes the polygon is not at the mercy of rounding
        self.on_line: dict[tuple[float, float], tuple[set, dict]] = {}

        def mark(v, hull_pos=None, pocket=None, j=None):
            for ref in (v.left_line, v.right_line):
                if ref is None:
                    continue
                hs, ps = self.on_line.setdefault((lt[ref].a1, lt[ref].a2), (set(), {}))
                if hull_pos is not None:
                    hs.add(hull_pos)
                else:
                    ps.setdefault(pocket, set()).add(j)

        for h, v in enumerate(idx.hull):
            mark(v, hull_pos=h)
        for i, conc in enumerate(idx.concavities):
            for j, v in enumerate(conc, start=1):
                mark(v, pocket=i, j=j)
        self.pockets = []
        self.depth = []
        for i in range(len(idx.hull) - 1):
            chain = idx.pocket(i)
            pts = [(v.x, v.y) for v in chain]
            owners = [(lt[v.right_line].a1, lt[v.right_line].a2) for v in chain[:-1]]
            self.pockets.append((pts, owners, [v.right_line for v in chain[:-1]]))
            # deepest vertical drop of the pocket below its hull edge
            (x0, y0), (x1, y1) = pts[0], pts[-1]
            d = 0.0
            for (x, y) in pts[1:-1]:
                hy = y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                d = max(d, hy - y)
            self.depth.append(d)


def sort_by_x_intercept(lines: Iterable[DualLine]) -> list[DualLine]:
    """Order lines as a ray at angle 0+ meets them; ties are rejected."""
    out = sorted(lines, key=lambda l: l.x_intercept)
    for a, b in zip(out, out[1:]):
        if a.x_intercept == b.x_intercept:
            raise GeneralPositionError("duplicate x-intercept", (a.source, b.source))
    return out


def _turns_convex(a: Point, b: Point, c: Point) -> bool:
    """Whether ``b`` lies strictly outside segment ``ac`` (away from the origin)."""
    ux, uy = b[0] - a[0], b[1] - a[1]
    vx, vy = c[0] - a[0], c[1] - a[1]
    cross = ux * vy - uy * vx
    return cross > GEOM_EPS * math.hypot(ux, uy) * math.hypot(vx, vy)


class SweepStats:
    __slots__ = ("events", "stale", "vertices")

    def __init__(self):
        self.events = self.stale = self.vertices = 0


def build_polygon(lines: Sequence[DualLine], k: int, tau: float | None = None,
                  check: bool = False, stats: SweepStats | None = None) -> KPolygonIndex:
    """Trace the k-polygon of ``lines`` (sorted by x-intercept).

    With ``check`` the event queue is audited after every swap: each adjacent
    pair that will still cross must have its crossing queued.  That is
    quadratic and meant for tests only.
    """
    m = len(lines)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if m < k:
        raise DomainError(f"need at least k={k} lines, got {m}")
    if tau is None:
        tau = lines[0].tau
    for a, b in zip(lines, lines[1:]):
        if not a.x_intercept < b.x_intercept:
            if a.x_intercept == b.x_intercept:
                raise GeneralPositionError("duplicate x-intercept", (a.source, b.source))
            raise DomainError("lines are not sorted by x-intercept")
    if any(l.tau != tau for l in lines):
        raise DomainError("lines were transformed with different tau")

    A1 = [l.a1 for l in lines]
    A2 = [l.a2 for l in lines]
    ids = [l.source for l in lines]
    order = list(range(m))
    pos = list(range(m))
    heap: list[tuple[float, int, int]] = []
    pending: set[tuple[int, int]] | None = set() if check else None
    st = stats if stats is not None else SweepStats()
    t_cur = 0.0
    kk = k - 1

    def push(i: int) -> None:
        a, b = order[i], order[i + 1]
        den = A2[b] - A2[a]
        if den <= 0.0:
            return  # b never overtakes a inside the quadrant
        t = (A1[a] - A1[b]) / den
        if t <= t_cur:
            raise GeneralPositionError(
                f"concurrent crossings at direction tan={t_cur!r}", (ids[a], ids[b]))
        heapq.heappush(heap, (t, a, b))
        if pending is not None:
            pending.add((a, b))

    for i in range(m - 1):
        push(i)

    first = order[kk]
    hull = [PolygonVertex(Point(tau / A1[first], 0.0), None, ids[first])]
    concs: list[list[PolygonVertex]] = [[]]

    def add_vertex(v: PolygonVertex) -> None:
        while len(hull) >= 2 and not _turns_convex(hull[-2].point, hull[-1].point, v.point):
            dropped = hull.pop()
            tail = concs.pop()
            concs[-1].append(dropped)
            concs[-1].extend(tail)
        hull.append(v)
        concs.append([])
        st.vertices += 1

    while heap:
        t, a, b = heapq.heappop(heap)
        if pending is not None:
            pending.discard((a, b))
        i = pos[a]
        if i + 1 >= m or order[i + 1] != b:
            st.stale += 1
            continue
        st.events += 1
        t_cur = t
        if i == kk or i + 1 == kk:
            det = A1[a] * A2[b] - A2[a] * A1[b]
            p = Point(tau * (A2[b] - A2[a]) / det, tau * (A1[a] - A1[b]) / det)
            # the line leaving position k-1 owns the edge before the vertex
            left, right = (a, b) if i == kk else (b, a)
            add_vertex(PolygonVertex(p, ids[left], ids[right]))
        order[i], order[i + 1] = b, a
        pos[a], pos[b] = i + 1, i
        if i > 0:
            push(i - 1)
        if i + 2 < m:
            push(i + 1)
        if pending is not None:
            _audit_queue(order, A1, A2, pending, ids)

    last = order[kk]
    add_vertex(PolygonVertex(Point(0.0, tau / A2[last]), ids[last], None))
    # the first vertex never moves; drop the extra empty list left by the last append
    concs.pop()
    used = {v.left_line for v in hull} | {v.right_line for v in hull}
    for c in concs:
        used.update(v.left_line for v in c)
        used.update(v.right_line for v in c)
    used.discard(None)
    table = {l.source: l for l in lines if l.source in used}
    return KPolygonIndex(k, tau, tuple(hull), tuple(tuple(c) for c in concs), table)


def _audit_queue(order, A1, A2, pending, ids) -> None:
    for i in range(len(order) - 1):
        a, b = order[i], order[i + 1]
        if A2[b] > A2[a] and (a, b) not in pending:
            raise AssertionError(f"missing event for adjacent pair {ids[a]}, {ids[b]}")


@dataclass
class BuildReport:
    n: int
    k: int
    tau: float
    n_lines: int
    hull_size: int
    size: int
    events: int
    seconds: float
    skyband: int  # candidates kept by the skyband approximation

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def build_index(tuples: Iterable[DataTuple], k: int, tau: float = 0.5,
                use_skyband: bool = True, refine: int = 16, report: bool = False):
    """Build the k-polygon index of a relation.

    By default the sweep only sees the tuples kept by the skyband
    approximation, further filtered with seeds from ``refine`` directions
    (0 disables that pass).  ``use_skyband=False`` sweeps every tuple, which
    gives the same polygon and is useful for cross-checking.
    """
    import time

    from mrtop.skyband import approximate_skyband, refine_candidates

    start = time.perf_counter()
    tuples = list(tuples)
    if len(tuples) < k:
        raise DomainError(f"k={k} exceeds the number of tuples ({len(tuples)})")
    if use_skyband:
        keep = approximate_skyband(tuples, k, tau).members
        chosen = [v for v in tuples if v.id in keep]
        n_skyband = len(chosen)
        if refine:
            keep = refine_candidates(chosen, k, tau, refine).members
            chosen = [v for v in chosen if v.id in keep]
    else:
        chosen = tuples
        n_skyband = len(tuples)
    lines = sort_by_x_intercept(dual_transform(v, tau) for v in chosen)
    stats = SweepStats()
    idx = build_polygon(lines, k, tau, stats=stats)
    if not report:
        return idx
    return idx, BuildReport(len(tuples), k, tau, len(lines), idx.hull_size, idx.size,
                            stats.events, time.perf_counter() - start, n_skyband)


# -- invariants ---------------------------------------------------------------

def validate_index(idx: KPolygonIndex, concavity_bound: bool = True) -> None:
    """Raise InvariantViolationError unless ``idx`` is structurally sound.

    ``concavity_bound`` also rejects pockets longer than ``2k - 1``.  Some
    correctly built polygons exceed that bound, so callers loading their own
    indexes may switch it off.
    """
    def fail(msg):
        raise InvariantViolationError(msg)

    if idx.k < 1 or not idx.tau > 0:
        fail(f"bad header k={idx.k} tau={idx.tau}")
    if len(idx.hull) < 2:
        fail("hull needs at least the two axis endpoints")
    if len(idx.concavities) != len(idx.hull) - 1:
        fail("concavity array must have one entry per hull edge")
    if idx.hull[0].y != 0.0 or idx.hull[-1].x != 0.0:
        fail("hull must start on the x-axis and end on the y-axis")
    bound = 2 * idx.k - 1
    for i, c in enumerate(idx.concavities):
        if concavity_bound and len(c) > bound:
            fail(f"concavity {i} holds {len(c)} vertices, bound is {bound}")
    angles = [math.atan2(v.y, v.x) for v in idx.vertices()]
    if any(b <= a for a, b in zip(angles, angles[1:])):
        fail("vertex directions are not strictly increasing")
    for a, b, c in zip(idx.hull, idx.hull[1:], idx.hull[2:]):
        if not _turns_convex(a.point, b.point, c.point):
            fail("hull is not strictly convex")
    for v in idx.vertices():
        for ref in (v.left_line, v.right_line):
            if ref is not None and ref not in idx.line_table:
                fail(f"vertex refers to unknown line {ref!r}")


# -- persistence --------------------------------------------------------------

_HEADER = struct.Struct("<4sHIdIII")  # magic, version, k, tau, |hull|, |C| total, |lines|
_VERTEX = struct.Struct("<ddii")
_U32 = struct.Struct("<I")
_LINE = struct.Struct("<dd")
_ID_STR, _ID_INT = 0, 1


def _encode_id(v) -> bytes:
    if isinstance(v, int) and not isinstance(v, bool):
        raw, tag = str(v).encode(), _ID_INT
    else:
        raw, tag = str(v).encode("utf-8"), _ID_STR
    return struct.pack("<BH", tag, len(raw)) + raw


def serialize_index(idx: KPolygonIndex, sink: BinaryIO | str | os.PathLike) -> None:
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(dumps_index(idx))
    else:
        sink.write(dumps_index(idx))


def dumps_index(idx: KPolygonIndex) -> bytes:
    lines = list(idx.line_table.values())
    ref = {l.source: i for i, l in enumerate(lines)}

    def vrec(v: PolygonVertex) -> bytes:
        return _VERTEX.pack(v.x, v.y,
                            -1 if v.left_line is None else ref[v.left_line],
                            -1 if v.right_line is None else ref[v.right_line])

    out = [_HEADER.pack(FORMAT_MAGIC, FORMAT_VERSION, idx.k, idx.tau, len(idx.hull),
                        sum(len(c) for c in idx.concavities), len(lines))]
    out.extend(vrec(v) for v in idx.hull)
    for c in idx.concavities:
        out.append(_U32.pack(len(c)))
        out.extend(vrec(v) for v in c)
    for l in lines:
        out.append(_encode_id(l.source))
        out.append(_LINE.pack(l.a1, l.a2))
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, s: struct.Struct) -> tuple:
        if self.off + s.size > len(self.data):
            raise TruncatedStreamError(f"stream ends at byte {len(self.data)}")
        vals = s.unpack_from(self.data, self.off)
        self.off += s.size
        return vals

    def raw(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise TruncatedStreamError(f"stream ends at byte {len(self.data)}")
        b = self.data[self.off:self.off + n]
        self.off += n
        return b


def deserialize_index(source: BinaryIO | str | os.PathLike | bytes,
                      concavity_bound: bool = True) -> KPolygonIndex:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    return loads_index(data, concavity_bound)


def loads_index(data: bytes, concavity_bound: bool = True) -> KPolygonIndex:
    r = _Reader(data)
    if len(data) < 4:
        raise TruncatedStreamError("stream too short for a header")
    if data[:4] != FORMAT_MAGIC:
        raise IndexFormatError("not a k-polygon index file")
    if len(data) >= 6:
        (version,) = struct.unpack_from("<H", data, 4)
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"format version {version}, expected {FORMAT_VERSION}")
    _, _, k, tau, nh, nc, nl = r.take(_HEADER)
    hull_raw = [r.take(_VERTEX) for _ in range(nh)]
    conc_raw = []
    for _ in range(max(nh - 1, 0)):
        (n,) = r.take(_U32)
        if n > nc:
            raise InvariantViolationError("concavity length exceeds header count")
        conc_raw.append([r.take(_VERTEX) for _ in range(n)])
    if sum(len(c) for c in conc_raw) != nc:
        raise InvariantViolationError("concavity total disagrees with header")
    lines = []
    for _ in range(nl):
        tag, n = r.take(struct.Struct("<BH"))
        text = r.raw(n).decode("utf-8")
        source = int(text) if tag == _ID_INT else text
        a1, a2 = r.take(_LINE)
        lines.append(DualLine(source, a1, a2, tau))
    if r.off != len(data):
        raise IndexFormatError(f"{len(data) - r.off} trailing bytes")

    def vertex(rec) -> PolygonVertex:
        x, y, li, ri = rec
        for j in (li, ri):
            if j >= nl or j < -1:
                raise InvariantViolationError(f"line reference {j} out of range")
        return PolygonVertex(Point(x, y), None if li < 0 else lines[li].source,
                             None if ri < 0 else lines[ri].source)

    idx = KPolygonIndex(k, tau, tuple(vertex(v) for v in hull_raw),
                        tuple(tuple(vertex(v) for v in c) for c in conc_raw),
                        {l.source: l for l in lines})
    validate_index(idx, concavity_bound)
    return idx


def to_json(idx: KPolygonIndex) -> str:
    """Human-readable export of the same content as the binary format."""
    def v(p: PolygonVertex):
        return {"x": p.x, "y": p.y, "left": p.left_line, "right": p.right_line}

    return json.dumps({
        "format_version": FORMAT_VERSION,
        "k": idx.k,
        "tau": idx.tau,
        "hull": [v(p) for p in idx.hull],
        "concavities": [[v(p) for p in c] for c in idx.concavities],
        "lines": [{"id": l.source, "a1": l.a1, "a2": l.a2} for l in idx.line_table.values()],
    }, indent=1)

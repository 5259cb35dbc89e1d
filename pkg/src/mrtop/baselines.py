"""Reference answers for maximal reverse top-k queries.

``oracle_mrtop`` applies the definition literally: it finds every direction
where ``q`` ties with some tuple and counts, between each pair of
consecutive ties, how many tuples beat ``q``.  ``wang_mrtop`` is the linear
dual-space baseline that splits the query line at every data line and
drops pieces once ``k`` lines lie below them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable

import numpy as np

from mrtop.core import (HALF_PI, AngularInterval, DataTuple, Direction,
                        dual_transform)
from mrtop.query import MrtopResult, merge_adjacent

# probe budget per chunk of the rank matrix (probes x tuples)
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class Breakpoint:
    """Direction tangent ``t`` at which ``other`` ties with the query."""

    t: float
    other: Hashable


def breakpoints(D: Iterable[DataTuple], q: DataTuple) -> list[Breakpoint]:
    out = []
    for v in D:
        if v.a2 == q.a2:
            continue  # parallel duals: the order never changes
        t = (v.a1 - q.a1) / (q.a2 - v.a2)
        if t >= 0.0 and math.isfinite(t):
            out.append(Breakpoint(t, v.id))
    out.sort(key=lambda b: b.t)
    return out


def _as_arrays(D):
    arr = np.array([(v.a1, v.a2) for v in D], dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _ranks_at(a1, a2, q, ts: np.ndarray) -> np.ndarray:
    """rank of ``q`` at each finite tangent in ``ts``, by direct score comparison."""
    out = np.empty(len(ts), dtype=np.int64)
    if len(a1) == 0:
        out[:] = 0
        return out
    step = max(1, _CHUNK_CELLS // len(a1))
    for s in range(0, len(ts), step):
        t = ts[s:s + step, None]
        out[s:s + step] = np.count_nonzero(a1 + a2 * t > q.a1 + q.a2 * t, axis=1)
    return out


def oracle_mrtop(D: Iterable[DataTuple], q: DataTuple, k: int) -> MrtopResult:
    D = list(D)
    a1, a2 = _as_arrays(D)
    ts = np.array([b.t for b in breakpoints(D, q)], dtype=float)
    ts = np.unique(ts)
    # cells: [0], (0,t1), {t1}, (t1,t2), ..., (tm, inf), {inf}
    if len(ts):
        mids = np.concatenate([[ts[0] / 2], (ts[:-1] + ts[1:]) / 2, [ts[-1] + 1.0]])
    else:
        mids = np.array([1.0])
    rank_mid = _ranks_at(a1, a2, q, mids)
    rank_zero = int(np.count_nonzero(a1 > q.a1))
    rank_inf = int(np.count_nonzero(a2 > q.a2))

    intervals: list[AngularInterval] = []
    lo = None  # tangent where the current run started
    lo_closed = False
    if rank_zero < k:
        lo, lo_closed = 0.0, True
    bounds = np.concatenate([[0.0], ts])
    for i, r in enumerate(rank_mid):
        left = float(bounds[i])
        if r < k:
            if lo is None:
                lo, lo_closed = left, False
        elif lo is not None:
            if left > lo:  # a lone tie direction is not an interval
                intervals.append(_interval(lo, left, lo_closed, False))
            lo = None
    if lo is not None:
        intervals.append(_interval(lo, math.inf, lo_closed, rank_inf < k))
    return MrtopResult(tuple(merge_adjacent(intervals)))


def _interval(lo_t, hi_t, lo_closed, hi_closed) -> AngularInterval:
    lo = Direction.from_t(lo_t)
    hi = Direction.from_t(hi_t)
    return AngularInterval(lo, hi, lo_closed and lo.theta == 0.0,
                           hi_closed and hi.theta == HALF_PI)


def wang_mrtop(D: Iterable[DataTuple], q: DataTuple, k: int, tau: float = 0.5) -> MrtopResult:
    """Split the query line at each data line; drop pieces beaten ``k`` times.

    Pieces are kept as ``[lo_t, hi_t, count]`` in direction-tangent space,
    which parametrises the part of the query line inside the quadrant.
    """
    D = list(D)
    lq = dual_transform(q, tau)
    segs = [[0.0, math.inf, 0]]
    for v in D:
        lp = dual_transform(v, tau)
        if lp.a2 == lq.a2:
            t_split = None
        else:
            t_split = (lp.a1 - lq.a1) / (lq.a2 - lp.a2)
        nxt = []
        for lo, hi, c in segs:
            if t_split is not None and lo < t_split < hi:
                pieces = [(lo, t_split), (t_split, hi)]
            else:
                pieces = [(lo, hi)]
            for plo, phi in pieces:
                probe = _probe(plo, phi)
                # lp nearer the origin than lq along the probe ray => v beats q
                if math.isinf(probe):
                    wins = lp.a2 > lq.a2
                else:
                    wins = lp.a1 + lp.a2 * probe > lq.a1 + lq.a2 * probe
                cc = c + 1 if wins else c
                if cc < k:
                    nxt.append([plo, phi, cc])
        segs = nxt
        if not segs:
            break
    # endpoints at the axes are closed when the piece touching them survives
    intervals = []
    for lo, hi, _ in segs:
        intervals.append(_interval(lo, hi, lo == 0.0 and _count_at(D, q, 0.0) < k,
                                   math.isinf(hi) and _count_at(D, q, math.inf) < k))
    intervals.sort(key=lambda iv: iv.lo.theta)
    return MrtopResult(tuple(merge_adjacent(intervals)))


def _probe(lo: float, hi: float) -> float:
    if math.isinf(hi):
        return lo + 1.0
    return (lo + hi) / 2


def _count_at(D, q, t) -> int:
    if math.isinf(t):
        return sum(1 for v in D if v.a2 > q.a2)
    return sum(1 for v in D if v.a1 + v.a2 * t > q.a1 + q.a2 * t)

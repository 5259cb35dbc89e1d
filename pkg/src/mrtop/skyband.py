"""k-skyband: exact reference routine and the polygon-based approximation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

import numpy as np

from mrtop.core import DataTuple, dual_transform
from mrtop.errors import DomainError


@dataclass(frozen=True)
class SkybandSet:
    members: frozenset[Hashable]
    exact: bool

    def __contains__(self, item) -> bool:
        return item in self.members

    def __len__(self) -> int:
        return len(self.members)


def exact_skyband(D: Iterable[DataTuple], k: int) -> SkybandSet:
    """Tuples strictly dominated in both attributes by fewer than ``k`` others.

    Quadratic; only used as a test oracle.
    """
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    D = list(D)
    if not D:
        return SkybandSet(frozenset(), True)
    arr = np.array([(v.a1, v.a2) for v in D])
    keep = set()
    for i, v in enumerate(D):
        dominated_by = np.count_nonzero((arr[:, 0] > v.a1) & (arr[:, 1] > v.a2))
        if dominated_by < k:
            keep.add(v.id)
    return SkybandSet(frozenset(keep), True)


def _top_k(D: list[DataTuple], k: int, attr: int) -> list[DataTuple]:
    # ties: the other attribute descending, then id
    if attr == 0:
        key = lambda v: (-v.a1, -v.a2, str(v.id))
    else:
        key = lambda v: (-v.a2, -v.a1, str(v.id))
    return sorted(D, key=key)[:k]


def seed_tuples(D: list[DataTuple], k: int) -> list[DataTuple]:
    """The k best tuples on each axis, deduplicated by id."""
    seen = {}
    for v in _top_k(D, k, 0) + _top_k(D, k, 1):
        seen.setdefault(v.id, v)
    return list(seen.values())


def _reaching(arr: np.ndarray, idx, tau: float) -> np.ndarray:
    """Mask of tuples whose dual line touches or enters the polygon of ``idx``."""
    hull = np.array([v.point for v in idx.hull])
    return (arr @ hull.T).max(axis=1) >= tau


def approximate_skyband(D: Iterable[DataTuple], k: int, tau: float = 0.5) -> SkybandSet:
    """Candidate set for the k-polygon, built from a small seed polygon.

    Builds the k-polygon of the seed tuples and keeps every tuple whose dual
    line reaches into it (touching counts), plus the seeds themselves.  A
    line reaches into the polygon exactly when it passes strictly below some
    polygon vertex, and the farthest-reaching vertex for any line is on the
    hull, so only hull vertices are tested.
    """
    from mrtop.index import build_polygon, sort_by_x_intercept

    D = list(D)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if len(D) < k:
        raise DomainError(f"need at least k={k} tuples, got {len(D)}")
    seeds = seed_tuples(D, k)
    idx = build_polygon(sort_by_x_intercept(dual_transform(v, tau) for v in seeds), k, tau)
    reach = _reaching(np.array([(v.a1, v.a2) for v in D]), idx, tau)
    members = {v.id for v, r in zip(D, reach) if r}
    members.update(v.id for v in seeds)
    return SkybandSet(frozenset(members), False)


def refine_candidates(D: Iterable[DataTuple], k: int, tau: float = 0.5,
                      directions: int = 16) -> SkybandSet:
    """Shrink a candidate set using seeds from many directions.

    The polygon of any subset contains the polygon of the whole set, so the
    filter keeps every line that can reach the k-polygon.  Seeding with the
    top ``k`` tuples at ``directions + 1`` evenly spaced angles gives a much
    tighter seed polygon than the two axes alone.
    """
    from mrtop.index import build_polygon, sort_by_x_intercept

    D = list(D)
    if len(D) < k:
        raise DomainError(f"need at least k={k} tuples, got {len(D)}")
    arr = np.array([(v.a1, v.a2) for v in D])
    seeds = {v.id: v for v in seed_tuples(D, k)}
    for theta in np.linspace(0.0, np.pi / 2, directions + 1)[1:-1]:
        scores = arr @ np.array([np.cos(theta), np.sin(theta)])
        for i in np.argpartition(-scores, k - 1)[:k]:
            seeds.setdefault(D[i].id, D[i])
    seed_list = list(seeds.values())
    idx = build_polygon(sort_by_x_intercept(dual_transform(v, tau) for v in seed_list), k, tau)
    reach = _reaching(arr, idx, tau)
    members = {v.id for v, r in zip(D, reach) if r}
    members.update(seeds)
    return SkybandSet(frozenset(members), False)

import dataclasses
import io
import json
import math
import struct

import numpy as np
import pytest
from conftest import kth_radius, relation
from hypothesis import given, settings
from hypothesis import strategies as st

from mrtop.core import HALF_PI, DataTuple, dual_transform
from mrtop.errors import (DomainError, GeneralPositionError, IndexFormatError,
                          InvariantViolationError, TruncatedStreamError,
                          VersionMismatchError)
from mrtop.index import (build_index, build_polygon, deserialize_index, dumps_index,
                         loads_index, serialize_index, sort_by_x_intercept, to_json,
                         validate_index)

DISTS = ["uniform", "correlated", "anticorrelated"]


def duals(pairs, tau=1.0):
    return [dual_transform(DataTuple(p, *p), tau) for p in pairs]


def sample_thetas(idx, count=1000):
    """Evenly spaced directions, nudged off any vertex direction."""
    vert = np.array([math.atan2(v.y, v.x) for v in idx.vertices()])
    out = []
    for th in np.linspace(0.0, HALF_PI, count):
        if np.min(np.abs(vert - th)) < 1e-9:
            th = th + 2e-9 if th < HALF_PI / 2 else th - 2e-9
        out.append(float(th))
    return out


def brute_kth_line(D, k, theta, tau):
    c, s = math.cos(theta), math.sin(theta)
    return sorted(D, key=lambda v: tau / (v.a1 * c + v.a2 * s))[k - 1].id


def monotone_chain_far_side(points):
    """Convex hull of points plus the origin; returns the part away from it.

    Near-collinear triples count as collinear: a dual line can own two
    contour edges, so exactly collinear vertices occur and rounding must not
    decide whether the middle one is extreme.
    """
    pts = sorted(set(points) | {(0.0, 0.0)})

    def cross(o, a, b):
        ux, uy, vx, vy = a[0] - o[0], a[1] - o[1], b[0] - o[0], b[1] - o[1]
        c = ux * vy - uy * vx
        return 0.0 if abs(c) <= 1e-12 * math.hypot(ux, uy) * math.hypot(vx, vy) else c

    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    ring = lower[:-1] + upper[:-1]
    return {p for p in ring if p != (0.0, 0.0)}


def _segments_cross(p, q, r, s):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return d1 * d2 < 0 and d3 * d4 < 0


class TestSort:
    def test_order(self):
        out = sort_by_x_intercept(duals([(1, 1), (2, 2), (4, 1)]))
        assert [l.source for l in out] == [(4, 1), (2, 2), (1, 1)]
        assert [l.x_intercept for l in out] == [0.25, 0.5, 1.0]

    def test_single(self):
        (l,) = duals([(1, 1)])
        assert sort_by_x_intercept([l]) == [l]

    def test_duplicate_intercept(self):
        with pytest.raises(GeneralPositionError):
            sort_by_x_intercept(duals([(2, 1), (2, 3)]))


class TestBuildExamples:
    def test_three_lines_perturbed(self):
        idx = build_polygon(sort_by_x_intercept(duals([(1, 3), (2, 2.000001), (3, 1)])), 1, 1.0)
        assert idx.hull_size == 4
        assert all(len(c) == 0 for c in idx.concavities)
        assert idx.hull[0].point == (1 / 3, 0.0)
        assert idx.hull[-1].point == (0.0, 1 / 3)
        assert [v.right_line for v in idx.hull[:-1]] == [(3, 1), (2, 2.000001), (1, 3)]

    def test_three_lines_concurrent(self):
        with pytest.raises(GeneralPositionError) as err:
            build_polygon(sort_by_x_intercept(duals([(1, 3), (2, 2), (3, 1)])), 1, 1.0)
        assert err.value.line_ids

    def test_single_line(self):
        idx = build_polygon(duals([(2, 4)]), 1, 1.0)
        assert [v.point for v in idx.hull] == [(0.5, 0.0), (0.0, 0.25)]
        assert idx.concavities == ((),)

    def test_small_k2(self):
        pairs = [(0.9, 0.1), (0.1, 0.9), (0.5, 0.5 + 1e-8)]
        idx = build_polygon(sort_by_x_intercept(duals(pairs, 0.5)), 2, 0.5)
        assert all(len(c) <= 3 for c in idx.concavities)
        D = [DataTuple(p, *p) for p in pairs]
        for th in sample_thetas(idx, 500):
            assert idx.radius_at(th) == pytest.approx(kth_radius(D, 2, th, 0.5), rel=1e-9)

    def test_too_few_lines(self):
        with pytest.raises(DomainError):
            build_polygon(duals([(1, 2)]), 2, 1.0)

    def test_unsorted_input(self):
        with pytest.raises(DomainError):
            build_polygon(duals([(1, 1), (4, 1)]), 1, 1.0)

    def test_k_exceeds_relation(self):
        with pytest.raises(DomainError):
            build_index(relation(3), 4)

    def test_report(self):
        idx, rep = build_index(relation(1000, "uniform", 7), 3, report=True)
        assert rep.n == 1000 and rep.hull_size == idx.hull_size >= 2
        assert rep.size == idx.size and rep.seconds >= 0
        assert max(len(c) for c in idx.concavities) <= 5


@pytest.mark.parametrize("dist", DISTS)
@pytest.mark.parametrize("n,k,seed", [(40, 1, 0), (120, 3, 1), (200, 5, 2), (200, 8, 3)])
class TestGeometry:
    def test_dense_trace(self, dist, n, k, seed):
        D = relation(n, dist, seed)
        idx = build_index(D, k)
        for th in sample_thetas(idx):
            assert idx.kth_line_at(th) == brute_kth_line(D, k, th, idx.tau)

    def test_star_shaped(self, dist, n, k, seed):
        idx = build_index(relation(n, dist, seed), k)
        verts = [v.point for v in idx.vertices()]
        edges = list(zip(verts, verts[1:]))
        for v in verts:
            for p, r in edges:
                if v in (p, r):
                    continue
                assert not _segments_cross((0.0, 0.0), v, p, r)

    def test_hull_matches_independent_hull(self, dist, n, k, seed):
        idx = build_index(relation(n, dist, seed), k)
        expected = monotone_chain_far_side([v.point for v in idx.vertices()])
        assert {v.point for v in idx.hull} == expected

    def test_full_sweep_agrees_with_filtered(self, dist, n, k, seed):
        D = relation(n, dist, seed)
        a = build_index(D, k)
        b = build_index(D, k, use_skyband=False)
        assert a.hull == b.hull and a.concavities == b.concavities

    def test_queue_audit(self, dist, n, k, seed):
        D = relation(n, dist, seed)
        lines = sort_by_x_intercept(dual_transform(v, 0.5) for v in D)
        build_polygon(lines, k, 0.5, check=True)


@pytest.mark.parametrize("dist", DISTS)
def test_monotone_depth(dist):
    D = relation(200, dist, 11)
    polys = [build_index(D, k) for k in range(1, 6)]
    for th in np.linspace(0.0, HALF_PI, 1000):
        radii = [p.radius_at(float(th)) for p in polys]
        assert all(a < b for a, b in zip(radii, radii[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 150), st.integers(1, 8), st.sampled_from(DISTS), st.integers(0, 10**6))
def test_structural_invariants(n, k, dist, seed):
    if n < k:
        return
    D = relation(n, dist, seed)
    idx = build_index(D, k)
    validate_index(idx, concavity_bound=False)
    assert loads_index(dumps_index(idx), concavity_bound=False) == idx
    verts = idx.vertices()
    for a, b in zip(verts, verts[1:]):
        th = (math.atan2(a.y, a.x) + math.atan2(b.y, b.x)) / 2
        assert a.right_line == brute_kth_line(D, k, th, idx.tau)


class TestLongPocket:
    """A correct 5-polygon with a 10-vertex pocket, beyond the 2k-1 bound."""

    @pytest.fixture
    def built(self):
        D = relation(103, "uniform", 1954)
        return D, build_index(D, 5)

    def test_polygon_matches_trace(self, built):
        D, idx = built
        for th in sample_thetas(idx, 5000):
            assert idx.kth_line_at(th) == brute_kth_line(D, 5, th, idx.tau)

    def test_pocket_length(self, built):
        _, idx = built
        assert max(len(c) for c in idx.concavities) == 10

    def test_line_owns_three_edges(self, built):
        _, idx = built
        owners = [v.right_line for v in idx.vertices()[:-1]]
        assert max(owners.count(o) for o in set(owners)) == 3

    def test_default_load_rejects_it(self, built):
        _, idx = built
        with pytest.raises(InvariantViolationError):
            loads_index(dumps_index(idx))
        assert loads_index(dumps_index(idx), concavity_bound=False) == idx


class TestSerialization:
    @pytest.fixture
    def idx(self):
        return build_index(relation(300, "anticorrelated", 5), 4)

    def test_roundtrip(self, idx):
        back = loads_index(dumps_index(idx))
        assert back == idx
        assert back.line_table == idx.line_table

    def test_file_roundtrip(self, idx, tmp_path):
        p = tmp_path / "x.idx"
        serialize_index(idx, p)
        assert deserialize_index(p) == idx
        buf = io.BytesIO()
        serialize_index(idx, buf)
        assert deserialize_index(io.BytesIO(buf.getvalue())) == idx

    def test_int_ids_survive(self):
        D = [DataTuple(i, 1 - i / 10, 0.1 + (i / 10) ** 1.5) for i in range(5)]
        idx = build_index(D, 2)
        back = loads_index(dumps_index(idx))
        assert set(back.line_table) == set(idx.line_table)
        assert all(isinstance(i, int) for i in back.line_table)

    def test_deterministic_bytes(self):
        D = relation(500, "uniform", 9)
        assert dumps_index(build_index(D, 3)) == dumps_index(build_index(D, 3))

    def test_empty_stream(self):
        with pytest.raises(TruncatedStreamError):
            loads_index(b"")

    def test_truncated(self, idx):
        with pytest.raises(TruncatedStreamError):
            loads_index(dumps_index(idx)[:-3])

    def test_version(self, idx):
        data = bytearray(dumps_index(idx))
        struct.pack_into("<H", data, 4, 99)
        with pytest.raises(VersionMismatchError):
            loads_index(bytes(data))

    def test_bad_magic(self, idx):
        with pytest.raises(IndexFormatError):
            loads_index(b"XXXX" + dumps_index(idx)[4:])

    def test_trailing_bytes(self, idx):
        with pytest.raises(IndexFormatError):
            loads_index(dumps_index(idx) + b"\0")

    def test_concavity_of_length_2k(self):
        for seed in range(50):
            idx = build_index(relation(200, "anticorrelated", seed), 4)
            longest = max(len(c) for c in idx.concavities)
            if longest >= 2 and longest % 2 == 0:
                break
        else:
            pytest.fail("no index with an even-length concavity found")
        forged = dataclasses.replace(idx, k=longest // 2)
        with pytest.raises(InvariantViolationError):
            loads_index(dumps_index(forged))

    def test_json_export(self, idx):
        doc = json.loads(to_json(idx))
        assert doc["k"] == 4 and len(doc["hull"]) == idx.hull_size
        assert sum(len(c) for c in doc["concavities"]) == idx.size - idx.hull_size

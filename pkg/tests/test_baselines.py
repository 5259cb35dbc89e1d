import math
import random

import numpy as np
import pytest
from conftest import assert_same_result, probe_queries, relation
from hypothesis import given, settings
from hypothesis import strategies as st

from mrtop.baselines import breakpoints, oracle_mrtop, wang_mrtop
from mrtop.core import HALF_PI, DataTuple

DISTS = ["uniform", "correlated", "anticorrelated"]


def dense_membership(D, q, k, thetas):
    arr = np.array([(v.a1, v.a2) for v in D]).reshape(-1, 2)
    out = []
    for th in thetas:
        w = np.array([math.cos(th), math.sin(th)])
        out.append(np.count_nonzero(arr @ w > q.a1 * w[0] + q.a2 * w[1]) < k)
    return out


class TestOracle:
    def test_two_tuple_example(self, tiny):
        res = oracle_mrtop(tiny, DataTuple("q", 0.8, 0.8), 1)
        assert res.thetas() == [pytest.approx((math.atan(1 / 7), math.atan(7)), abs=1e-12)]

    def test_two_tuple_dense_agreement(self, tiny):
        q = DataTuple("q", 0.8, 0.8)
        res = oracle_mrtop(tiny, q, 1)
        thetas = np.linspace(0, HALF_PI, 10_000)
        assert [res.contains(float(t)) for t in thetas] == dense_membership(tiny, q, 1, thetas)

    def test_empty_relation(self):
        res = oracle_mrtop([], DataTuple("q", 0.3, 0.4), 1)
        iv, = res.intervals
        assert (iv.lo.theta, iv.hi.theta, iv.lo_closed, iv.hi_closed) == (0.0, HALF_PI, True, True)

    def test_dominated(self):
        assert not oracle_mrtop([DataTuple("p", 2, 2)], DataTuple("q", 1, 1), 1)

    def test_breakpoints(self, tiny):
        bps = breakpoints(tiny, DataTuple("q", 0.8, 0.8))
        assert [b.other for b in bps] == ["a", "b"]
        assert [b.t for b in bps] == pytest.approx([1 / 7, 7])

    def test_parallel_duals_give_no_breakpoint(self):
        assert breakpoints([DataTuple("p", 0.3, 0.5)], DataTuple("q", 0.6, 0.5)) == []

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 80), st.integers(1, 5), st.integers(0, 10**6))
    def test_order_insensitive(self, n, k, seed):
        D = relation(n, "anticorrelated", seed)
        q = probe_queries(D, k, 2, seed)[1]
        shuffled = list(D)
        random.Random(seed).shuffle(shuffled)
        assert oracle_mrtop(D, q, k) == oracle_mrtop(shuffled, q, k)

    @pytest.mark.parametrize("dist", DISTS)
    def test_dense_sampling(self, dist):
        D = relation(150, dist, 5)
        thetas = np.linspace(1e-7, HALF_PI - 1e-7, 3000)
        for k in (1, 4):
            for q in probe_queries(D, k, 4, 5):
                res = oracle_mrtop(D, q, k)
                edges = [e for iv in res.intervals for e in (iv.lo.theta, iv.hi.theta)]
                keep = [t for t in thetas if not edges or min(abs(t - e) for e in edges) > 1e-7]
                assert [res.contains(float(t)) for t in keep] == dense_membership(D, q, k, keep)


class TestSegmentBaseline:
    def test_two_tuple_example(self, tiny):
        q = DataTuple("q", 0.8, 0.8)
        assert_same_result(wang_mrtop(tiny, q, 1), oracle_mrtop(tiny, q, 1))

    def test_empty(self):
        q = DataTuple("q", 0.3, 0.4)
        assert wang_mrtop([], q, 1) == oracle_mrtop([], q, 1)

    def test_dominated(self):
        assert not wang_mrtop([DataTuple("p", 2, 2)], DataTuple("q", 1, 1), 1)

    def test_parallel_and_nearer(self):
        # p = q/2: its dual is parallel and farther out, so q wins everywhere
        res = wang_mrtop([DataTuple("p", 0.2, 0.3)], DataTuple("q", 0.4, 0.6), 1)
        iv, = res.intervals
        assert (iv.lo.theta, iv.hi.theta) == (0.0, HALF_PI)

    def test_k_exceeds_relation(self):
        D = relation(4, "uniform", 1)
        iv, = wang_mrtop(D, DataTuple("q", 0.01, 0.01), 5).intervals
        assert (iv.lo.theta, iv.hi.theta, iv.lo_closed, iv.hi_closed) == (0.0, HALF_PI, True, True)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 300), st.integers(1, 10), st.sampled_from(DISTS),
           st.integers(0, 10**6), st.sampled_from([0.25, 0.5, 1.5]))
    def test_equals_oracle(self, n, k, dist, seed, tau):
        D = relation(n, dist, seed)
        for q in probe_queries(D, k, 4, seed):
            res = wang_mrtop(D, q, k, tau)
            assert_same_result(res, oracle_mrtop(D, q, k))

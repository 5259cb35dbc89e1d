import math

import numpy as np
import pytest

from mrtop.core import DataTuple
from mrtop.ingest import gen_synthetic
from mrtop.skyband import exact_skyband


def relation(n, dist="uniform", seed=0):
    return list(gen_synthetic(n, dist, seed).tuples)


def probe_queries(D, k, count, seed):
    """Queries that exercise non-trivial answers.

    Half are uniform in the unit square; the rest jitter a k-skyband member
    so the query line lands near the k-polygon.
    """
    rng = np.random.default_rng(seed)
    band = sorted(exact_skyband(D, k).members, key=str)
    by_id = {v.id: v for v in D}
    out = []
    for i in range(count):
        if i % 2 == 0 or not band:
            a1, a2 = 1.0 - rng.random(2)
        else:
            v = by_id[band[rng.integers(len(band))]]
            a1, a2 = v.a1 * (1 + rng.uniform(-0.03, 0.03)), v.a2 * (1 + rng.uniform(-0.03, 0.03))
        out.append(DataTuple(f"q{i}", float(a1), float(a2)))
    return out


def kth_radius(D, k, theta, tau=0.5):
    """Distance to the k-th nearest dual line along ``theta`` (brute force)."""
    c, s = math.cos(theta), math.sin(theta)
    r = sorted(tau / (v.a1 * c + v.a2 * s) for v in D)
    return r[k - 1]


def assert_same_result(a, b, tol=1e-9):
    assert len(a.intervals) == len(b.intervals), (a.thetas(), b.thetas())
    for x, y in zip(a.intervals, b.intervals):
        assert abs(x.lo.theta - y.lo.theta) <= tol, (a.thetas(), b.thetas())
        assert abs(x.hi.theta - y.hi.theta) <= tol, (a.thetas(), b.thetas())
        assert (x.lo_closed, x.hi_closed) == (y.lo_closed, y.hi_closed)


def results_match(a, b, tol=1e-9):
    try:
        assert_same_result(a, b, tol)
    except AssertionError:
        return False
    return True


@pytest.fixture
def tiny():
    return [DataTuple("a", 0.9, 0.1), DataTuple("b", 0.1, 0.9)]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def brute_kth_line_ids(D, k, theta, tau=0.5):
    c, s = math.cos(theta), math.sin(theta)
    return sorted(D, key=lambda v: tau / (v.a1 * c + v.a2 * s))[k - 1].id

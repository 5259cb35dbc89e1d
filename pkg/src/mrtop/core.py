"""Geometric primitives: tuples, their dual lines, query directions.

A tuple ``v = (a1, a2)`` is mapped to the line ``{u : u . v = tau}``.  Along
any ray from the origin, lines of higher-scoring tuples are met first, so
ranks in the primal become crossing orders in the dual plane.

Directions are kept as both an angle and its tangent ``t``.  Scores use the
weight vector ``(1, t)``, which orders tuples exactly like the unit vector
``(cos theta, sin theta)``; at ``theta = pi/2`` only ``a2`` is compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple

from mrtop.errors import DomainError

HALF_PI = math.pi / 2
# absolute tolerance for geometric predicates (parallelism, turn tests)
GEOM_EPS = 1e-12


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class DataTuple:
    id: Hashable
    a1: float
    a2: float

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError(
                f"tuple {self.id!r} has non-positive attribute ({self.a1}, {self.a2})"
            )


@dataclass(frozen=True)
class DualLine:
    """The line ``a1*x + a2*y = tau`` of tuple ``source``.

    ``a1`` and ``a2`` are kept so that crossings can be computed from raw
    attribute differences, which is far better conditioned than working
    from rounded slopes and intercepts.
    """

    source: Hashable
    a1: float
    a2: float
    tau: float
    slope: float = field(init=False)
    y_intercept: float = field(init=False)
    x_intercept: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "slope", -self.a1 / self.a2)
        object.__setattr__(self, "y_intercept", self.tau / self.a2)
        object.__setattr__(self, "x_intercept", self.tau / self.a1)

    @classmethod
    def from_slope_intercept(cls, slope: float, y_intercept: float,
                             tau: float = 1.0, source: Hashable = None) -> "DualLine":
        a2 = tau / y_intercept
        return cls(source, -slope * a2, a2, tau)

    def y_at(self, x: float) -> float:
        return (self.tau - self.a1 * x) / self.a2


@dataclass(frozen=True)
class Direction:
    theta: float
    t: float

    @classmethod
    def from_theta(cls, theta: float) -> "Direction":
        if not 0.0 <= theta <= HALF_PI:
            raise DomainError(f"direction {theta} outside [0, pi/2]")
        if theta == HALF_PI:
            return cls(HALF_PI, math.inf)
        return cls(theta, math.tan(theta))

    @classmethod
    def from_t(cls, t: float) -> "Direction":
        if not t >= 0.0:
            raise DomainError(f"tangent {t} is negative")
        if math.isinf(t):
            return cls(HALF_PI, math.inf)
        return cls(math.atan(t), t)

    @property
    def is_vertical(self) -> bool:
        return math.isinf(self.t)


X_AXIS = Direction(0.0, 0.0)
Y_AXIS = Direction(HALF_PI, math.inf)


@dataclass(frozen=True)
class AngularInterval:
    """A range of directions.  Only endpoints at 0 or pi/2 may be closed."""

    lo: Direction
    hi: Direction
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo.theta > self.hi.theta:
            raise DomainError(f"empty interval ({self.lo.theta}, {self.hi.theta})")
        if self.lo_closed and self.lo.theta != 0.0:
            raise DomainError("only an endpoint at 0 may be closed")
        if self.hi_closed and self.hi.theta != HALF_PI:
            raise DomainError("only an endpoint at pi/2 may be closed")

    @classmethod
    def from_thetas(cls, lo: float, hi: float, lo_closed: bool = False,
                    hi_closed: bool = False) -> "AngularInterval":
        return cls(Direction.from_theta(lo), Direction.from_theta(hi), lo_closed, hi_closed)

    def contains(self, theta: float) -> bool:
        if self.lo.theta < theta < self.hi.theta:
            return True
        return (self.lo_closed and theta == self.lo.theta) or (
            self.hi_closed and theta == self.hi.theta)

    @property
    def width(self) -> float:
        return self.hi.theta - self.lo.theta


def dual_transform(v: DataTuple, tau: float) -> DualLine:
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if not (v.a1 > 0 and v.a2 > 0):
        raise DomainError(f"tuple {v.id!r} has non-positive attribute")
    return DualLine(v.id, v.a1, v.a2, tau)


def line_intersection(l1: DualLine, l2: DualLine) -> Point | None:
    """Crossing point of two dual lines, or None when (nearly) parallel."""
    if abs(l1.slope - l2.slope) <= GEOM_EPS:
        return None
    det = l1.a1 * l2.a2 - l1.a2 * l2.a1
    if l1.tau == l2.tau:
        return Point(l1.tau * (l2.a2 - l1.a2) / det, l1.tau * (l1.a1 - l2.a1) / det)
    return Point((l1.tau * l2.a2 - l1.a2 * l2.tau) / det,
                 (l1.a1 * l2.tau - l1.tau * l2.a1) / det)


def crossing_t(l1: DualLine, l2: DualLine) -> float | None:
    """Tangent of the direction where two same-offset lines cross.

    This is where the scores of the two source tuples tie.  Returns None for
    parallel lines and for crossings outside the closed positive quadrant.
    """
    den = l2.a2 - l1.a2
    if den == 0.0:
        return None
    t = (l1.a1 - l2.a1) / den
    return t if t >= 0.0 else None


def direction_of(p: Point) -> Direction:
    x, y = p
    if x < 0 or y < 0 or (x == 0 and y == 0):
        raise DomainError(f"point {tuple(p)} is not in the closed positive quadrant")
    if x == 0:
        return Y_AXIS
    return Direction(math.atan2(y, x), y / x)


def passes_above(l: DualLine, p: Point) -> bool:
    """True iff ``l`` lies strictly farther from the origin than ``p`` at ``p.x``."""
    return l.a1 * p[0] + l.a2 * p[1] < l.tau


def score(v: DataTuple, t: float) -> float:
    return v.a1 + v.a2 * t


def beats(u: DataTuple, v: DataTuple, d: Direction) -> bool:
    """Whether ``u`` scores strictly higher than ``v`` in direction ``d``."""
    if d.is_vertical:
        return u.a2 > v.a2
    return u.a1 + u.a2 * d.t > v.a1 + v.a2 * d.t


def rank(D: Iterable[DataTuple], v: DataTuple, d: Direction) -> int:
    """Number of tuples of ``D`` scoring strictly higher than ``v``."""
    return sum(1 for u in D if beats(u, v, d))

"""Dataset loading, preprocessing and synthetic generation.

Preprocessing follows the usual protocol for this index: shift every value
by one and divide by the per-attribute maximum (plus one), then break ties
by repeatedly nudging duplicates upward by a tiny epsilon.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

from mrtop.core import DataTuple
from mrtop.errors import DomainError, IngestError

DISTRIBUTIONS = ("uniform", "correlated", "anticorrelated")
PERTURB_EPS = 1e-8
# smallest value a generator may emit; keeps dual lines finite
_GEN_FLOOR = 1e-3
_BAND_SIGMA = 0.1


@dataclass(frozen=True)
class Dataset:
    tuples: tuple[DataTuple, ...]
    provenance: dict = field(default_factory=dict)
    preprocessed: bool = False

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def column(self, attr: int) -> list[float]:
        return [v.a1 if attr == 0 else v.a2 for v in self.tuples]

    def as_array(self) -> np.ndarray:
        return np.array([(v.a1, v.a2) for v in self.tuples], dtype=float).reshape(-1, 2)


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline=""), True
    return source, False


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(source) -> Dataset:
    """Parse ``id,a1,a2`` rows from a path or text stream.

    A first row whose attribute fields are not numeric is taken as a header.
    Row numbers in errors are 1-based physical rows.
    """
    fh, owned = _open_text(source)
    try:
        rows = list(csv.reader(fh))
    finally:
        if owned:
            fh.close()
    tuples = []
    first = True
    for rowno, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise IngestError(f"expected 3 fields, got {len(row)}", rowno)
        rid, s1, s2 = (c.strip() for c in row)
        if first:
            first = False
            if not (_is_number(s1) and _is_number(s2)):
                continue  # header
        try:
            a1, a2 = float(s1), float(s2)
        except ValueError:
            raise IngestError(f"non-numeric field in {row!r}", rowno) from None
        if not (math.isfinite(a1) and math.isfinite(a2)):
            raise IngestError(f"non-finite value in {row!r}", rowno)
        if a1 <= 0 or a2 <= 0:
            raise IngestError(f"non-positive value in {row!r}", rowno)
        tuples.append(DataTuple(rid, a1, a2))
    name = str(source) if isinstance(source, (str, os.PathLike)) else "<stream>"
    return Dataset(tuple(tuples), {"source": name})


def write_csv(d: Dataset, sink, header: bool = False) -> None:
    fh, owned = (open(sink, "w", newline=""), True) if isinstance(
        sink, (str, os.PathLike)) else (sink, False)
    try:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(["id", "a1", "a2"])
        for v in d.tuples:
            w.writerow([v.id, repr(float(v.a1)), repr(float(v.a2))])
    finally:
        if owned:
            fh.close()


def dumps_csv(d: Dataset) -> str:
    buf = io.StringIO()
    write_csv(d, buf)
    return buf.getvalue()


def scale_unit(d: Dataset) -> Dataset:
    if not d.tuples:
        raise DomainError("cannot scale an empty dataset")
    m1 = max(v.a1 for v in d.tuples) + 1.0
    m2 = max(v.a2 for v in d.tuples) + 1.0
    scaled = tuple(DataTuple(v.id, (v.a1 + 1.0) / m1, (v.a2 + 1.0) / m2) for v in d.tuples)
    return replace(d, tuples=scaled, provenance={**d.provenance, "scaled": True})


def perturb_values(values: Sequence[float], eps: float = PERTURB_EPS) -> list[float]:
    """Bump later duplicates by ``eps`` until every value is unique.

    The first occurrence keeps its value; later copies accumulate more bumps.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    seen: set[float] = set()
    bumps: dict[float, int] = {}  # original value -> bumps handed out so far
    out = []
    for v in values:
        m = bumps.get(v, 0)
        w = v + m * eps
        while w in seen:
            m += 1
            w = v + m * eps
        seen.add(w)
        bumps[v] = m + 1
        out.append(w)
    return out


def perturb_general_position(d: Dataset, eps: float = PERTURB_EPS) -> Dataset:
    c1 = perturb_values(d.column(0), eps)
    c2 = perturb_values(d.column(1), eps)
    tuples = tuple(DataTuple(v.id, x, y) for v, x, y in zip(d.tuples, c1, c2))
    return replace(d, tuples=tuples)


def preprocess(d: Dataset, eps: float = PERTURB_EPS) -> Dataset:
    out = perturb_general_position(scale_unit(d), eps)
    return replace(out, preprocessed=True)


def gen_synthetic(n: int, dist: str = "uniform", seed: int = 0) -> Dataset:
    """Random dataset in (0, 1]^2, already in general position.

    ``correlated`` and ``anticorrelated`` scatter points in a Gaussian band
    around the main diagonal and the anti-diagonal respectively.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if dist not in DISTRIBUTIONS:
        raise DomainError(f"unknown distribution {dist!r}")
    rng = np.random.default_rng(seed)
    x = 1.0 - rng.random(n)  # (0, 1]
    if dist == "uniform":
        y = 1.0 - rng.random(n)
    else:
        noise = rng.normal(0.0, _BAND_SIGMA, n)
        y = x + noise if dist == "correlated" else 1.0 - x + noise
    x = np.clip(x, _GEN_FLOOR, 1.0)
    y = np.clip(y, _GEN_FLOOR, 1.0)
    tuples = tuple(DataTuple(f"s{i}", float(a), float(b)) for i, (a, b) in enumerate(zip(x, y)))
    d = Dataset(tuples, {"generator": dist, "n": n, "seed": seed})
    return replace(perturb_general_position(d), preprocessed=True)


def from_pairs(pairs: Iterable[tuple[float, float]], prefix: str = "t") -> Dataset:
    """Convenience constructor used by tests and the CLI."""
    return Dataset(tuple(DataTuple(f"{prefix}{i}", float(a), float(b))
                         for i, (a, b) in enumerate(pairs)))

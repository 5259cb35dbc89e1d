"""Command-line interface: build, query, batch, bench, stats, contours.

Timings follow the usual batch protocol: reading input files is included,
writing the result stream is not.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from mrtop.baselines import oracle_mrtop, wang_mrtop
from mrtop.core import DataTuple
from mrtop.errors import (DomainError, GeneralPositionError, IndexFormatError,
                          IngestError, MrtopError, TauMismatchError)
from mrtop.figures import contours_svg, parse_k_range, size_csv, size_table
from mrtop.index import build_index, deserialize_index, dumps_index
from mrtop.ingest import (DISTRIBUTIONS, Dataset, gen_synthetic, load_csv,
                          perturb_general_position, scale_unit, write_csv)
from mrtop.query import format_result, mrtop_query

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INGEST = 3
EXIT_BUILD = 4
EXIT_QUERY = 5

MODES = ("index", "wang", "oracle")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    queries: str | None = None
    index: str | None = None
    k: int | None = None
    tau: float | None = None
    mode: str = "index"
    strict: bool = True
    seed: int = 0
    shuffle: int | None = None
    out: str | None = None
    k_range: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise CliError(f"--k must be at least 1, got {self.k}", EXIT_USAGE)
        if self.tau is not None and not self.tau > 0:
            raise CliError(f"--tau must be positive, got {self.tau}", EXIT_USAGE)

    @property
    def tau_or_default(self) -> float:
        return 0.5 if self.tau is None else self.tau


# -- helpers ------------------------------------------------------------------

def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise CliError(f"{cfg.command}: missing {flags}", EXIT_USAGE)


def _load(path: str) -> Dataset:
    try:
        return load_csv(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_INGEST) from None


def _load_relation(path: str) -> list[DataTuple]:
    return list(perturb_general_position(_load(path)).tuples)


def _order(tuples: list[DataTuple], cfg: RunConfig) -> list[DataTuple]:
    if cfg.shuffle is not None:
        tuples = list(tuples)
        random.Random(cfg.shuffle).shuffle(tuples)
    return tuples


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(obj: dict) -> None:
    print(json.dumps(obj, indent=1, default=str), file=sys.stderr)


def _build(tuples, cfg: RunConfig):
    try:
        return build_index(tuples, cfg.k, cfg.tau_or_default, report=True)
    except (GeneralPositionError, DomainError) as exc:
        raise CliError(f"build failed: {exc}", EXIT_BUILD) from exc


# -- commands -----------------------------------------------------------------

def cmd_build(cfg: RunConfig) -> int:
    _need(cfg, "input", "k", "index")
    tuples = _load_relation(cfg.input)
    idx, rep = _build(tuples, cfg)
    Path(cfg.index).write_bytes(dumps_index(idx))
    _report({"command": "build", **rep.as_dict(), "index": cfg.index})
    return EXIT_OK


def _answer_index(idx, queries, strict):
    return [format_result(q.id, mrtop_query(idx, q, strict)) for q in queries]


def _answer_baseline(mode, D, queries, k, tau):
    fn = oracle_mrtop if mode == "oracle" else (lambda D, q, k: wang_mrtop(D, q, k, tau))
    return [format_result(q.id, fn(D, q, k)) for q in queries]


def _chunks(seq, n):
    size = max(1, -(-len(seq) // n))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def run_batch(cfg: RunConfig) -> tuple[list[str], dict]:
    """Answer the query file under ``cfg.mode``; returns lines and timings."""
    _need(cfg, "queries")
    if cfg.mode not in MODES:
        raise CliError(f"unknown mode {cfg.mode!r}", EXIT_USAGE)
    timing = {"mode": cfg.mode}
    t0 = time.perf_counter()
    queries = list(_load(cfg.queries).tuples)
    idx = D = None
    if cfg.mode == "index" and cfg.index:
        try:
            idx = deserialize_index(cfg.index, concavity_bound=False)
        except FileNotFoundError:
            raise CliError(f"no such file: {cfg.index}", EXIT_QUERY) from None
        except IndexFormatError as exc:
            raise CliError(f"bad index file: {exc}", EXIT_QUERY) from exc
        if cfg.tau is not None and cfg.tau != idx.tau:
            raise CliError(f"--tau {cfg.tau} does not match index tau {idx.tau}", EXIT_QUERY)
        if cfg.k is not None and cfg.k != idx.k:
            raise CliError(f"--k {cfg.k} does not match index k {idx.k}", EXIT_QUERY)
    else:
        _need(cfg, "input", "k")
        D = _order(_load_relation(cfg.input), cfg)
    timing["load_s"] = time.perf_counter() - t0
    if cfg.mode == "index" and idx is None:
        t1 = time.perf_counter()
        idx, rep = _build(D, cfg)
        timing["build_s"] = time.perf_counter() - t1
    k = idx.k if idx is not None else cfg.k
    tau = idx.tau if idx is not None else cfg.tau_or_default

    wall0, cpu0 = time.perf_counter(), time.process_time()
    try:
        if cfg.workers > 1 and len(queries) > 1:
            parts = _chunks(queries, cfg.workers)
            with ProcessPoolExecutor(cfg.workers) as ex:
                if idx is not None:
                    futs = [ex.submit(_answer_index, idx, p, cfg.strict) for p in parts]
                else:
                    futs = [ex.submit(_answer_baseline, cfg.mode, D, p, k, tau) for p in parts]
                lines = [ln for f in futs for ln in f.result()]
        elif idx is not None:
            lines = _answer_index(idx, queries, cfg.strict)
        else:
            lines = _answer_baseline(cfg.mode, D, queries, k, tau)
    except TauMismatchError as exc:
        raise CliError(str(exc), EXIT_QUERY) from exc
    except IngestError:
        raise
    except DomainError as exc:
        raise CliError(f"query failed: {exc}", EXIT_QUERY) from exc
    timing["query_wall_s"] = time.perf_counter() - wall0
    timing["query_cpu_s"] = time.process_time() - cpu0
    timing["queries"] = len(queries)
    timing["per_query_s"] = timing["query_wall_s"] / len(queries) if queries else 0.0
    timing["k"], timing["tau"] = k, tau
    return lines, timing


def cmd_batch(cfg: RunConfig) -> int:
    lines, timing = run_batch(cfg)
    _emit("".join(ln + "\n" for ln in lines), cfg.out)
    _report({"command": "batch", **timing})
    return EXIT_OK


def cmd_query(cfg: RunConfig, point: str) -> int:
    _need(cfg, "index")
    try:
        a1, a2 = (float(x) for x in point.split(","))
        q = DataTuple("q", a1, a2)
    except (ValueError, DomainError) as exc:
        raise CliError(f"bad query point {point!r}: {exc}", EXIT_USAGE) from None
    try:
        idx = deserialize_index(cfg.index, concavity_bound=False)
    except FileNotFoundError:
        raise CliError(f"no such file: {cfg.index}", EXIT_QUERY) from None
    _emit(format_result(q.id, mrtop_query(idx, q, cfg.strict)) + "\n", cfg.out)
    return EXIT_OK


def cmd_bench(cfg: RunConfig, oracle_sample: int) -> int:
    """Time every mode on the same batch; the oracle runs on a prefix sample."""
    _need(cfg, "input", "queries", "k")
    report = {"command": "bench"}
    index_cfg = RunConfig("batch", input=cfg.input, queries=cfg.queries, k=cfg.k,
                          tau=cfg.tau, strict=cfg.strict, shuffle=cfg.shuffle)
    _, report["index"] = run_batch(index_cfg)
    _, report["wang"] = run_batch(RunConfig(**{**index_cfg.__dict__, "mode": "wang"}))
    if oracle_sample:
        tmp = _load(cfg.queries)
        sample = Dataset(tmp.tuples[:oracle_sample])
        D = _order(_load_relation(cfg.input), cfg)
        t0 = time.perf_counter()
        for q in sample:
            oracle_mrtop(D, q, cfg.k)
        n = len(sample)
        report["oracle"] = {"queries": n,
                            "per_query_s": (time.perf_counter() - t0) / n if n else 0.0}
    per = report["index"]["per_query_s"]
    if per > 0:
        report["speedup_vs_wang"] = report["wang"]["per_query_s"] / per
        if "oracle" in report:
            report["speedup_vs_oracle"] = report["oracle"]["per_query_s"] / per
    _emit(json.dumps(report, indent=1) + "\n", cfg.out)
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    _need(cfg, "input", "k_range")
    ks = parse_k_range(cfg.k_range)
    if not ks:
        raise CliError("--k-range is empty", EXIT_USAGE)
    tuples = _load_relation(cfg.input)
    try:
        rows = size_table(tuples, ks, cfg.tau_or_default)
    except (GeneralPositionError, DomainError) as exc:
        raise CliError(f"build failed: {exc}", EXIT_BUILD) from exc
    _emit(size_csv(rows), cfg.out)
    return EXIT_OK


def cmd_contours(cfg: RunConfig, hulls: bool) -> int:
    _need(cfg, "input", "k_range")
    ks = parse_k_range(cfg.k_range)
    if not ks:
        raise CliError("--k-range is empty", EXIT_USAGE)
    tuples = _load_relation(cfg.input)
    try:
        indexes = [build_index(tuples, k, cfg.tau_or_default) for k in ks]
    except (GeneralPositionError, DomainError) as exc:
        raise CliError(f"build failed: {exc}", EXIT_BUILD) from exc
    _emit(contours_svg(indexes, hulls), cfg.out)
    return EXIT_OK


def cmd_gen(n: int, dist: str, seed: int, out: str | None) -> int:
    d = gen_synthetic(n, dist, seed)
    if out:
        write_csv(d, out)
    else:
        write_csv(d, sys.stdout)
    return EXIT_OK


def cmd_prep(cfg: RunConfig, out_queries: str | None) -> int:
    """Scale data and queries with the data's maxima, then break ties."""
    _need(cfg, "input", "out")
    data = _load(cfg.input)
    if not data.tuples:
        raise CliError("empty dataset", EXIT_INGEST)
    m1 = max(v.a1 for v in data) + 1.0
    m2 = max(v.a2 for v in data) + 1.0
    write_csv(perturb_general_position(scale_unit(data)), cfg.out)
    if cfg.queries:
        _need(cfg, "queries")
        if out_queries is None:
            raise CliError("prep: --queries needs --out-queries", EXIT_USAGE)
        qs = _load(cfg.queries)
        scaled = Dataset(tuple(DataTuple(v.id, (v.a1 + 1.0) / m1, (v.a2 + 1.0) / m2) for v in qs))
        write_csv(scaled, out_queries)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrtop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *flags):
        if "input" in flags:
            sp.add_argument("--input", help="dataset CSV (id,a1,a2)")
        if "queries" in flags:
            sp.add_argument("--queries", help="query CSV (id,a1,a2)")
        if "index" in flags:
            sp.add_argument("--index", help="index file")
        if "k" in flags:
            sp.add_argument("--k", type=int)
        sp.add_argument("--tau", type=float, default=None, help="dual offset (default 0.5)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output path (default stdout)")
        if "strict" in flags:
            sp.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                            help="also scan pockets the line may enter inside the hull")
        if "shuffle" in flags:
            sp.add_argument("--shuffle", type=int, default=None, metavar="SEED",
                            help="shuffle the dataset before baselines see it")
        if "k_range" in flags:
            sp.add_argument("--k-range", dest="k_range", help="e.g. 1..10")

    common(sub.add_parser("build", help="build and save a k-polygon index"),
           "input", "index", "k")
    sp = sub.add_parser("query", help="answer one query against an index")
    common(sp, "index", "strict")
    sp.add_argument("point", help="a1,a2")
    sp = sub.add_parser("batch", help="answer a query file")
    common(sp, "input", "queries", "index", "k", "strict", "shuffle")
    sp.add_argument("--mode", choices=MODES, default="index")
    sp.add_argument("--workers", type=int, default=1)
    sp = sub.add_parser("bench", help="time the index against both baselines")
    common(sp, "input", "queries", "k", "strict", "shuffle")
    sp.add_argument("--oracle-sample", type=int, default=5,
                    help="number of queries timed under the oracle (0 skips it)")
    common(sub.add_parser("stats", help="hull and polygon size per k (CSV)"),
           "input", "k_range")
    sp = sub.add_parser("contours", help="draw k-polygons as SVG")
    common(sp, "input", "k_range")
    sp.add_argument("--hulls", action="store_true", help="add dashed convex hulls")
    sp = sub.add_parser("gen", help="write a synthetic dataset")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp = sub.add_parser("prep", help="scale and perturb a dataset (and queries)")
    common(sp, "input", "queries")
    sp.add_argument("--out-queries")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "gen":
            if args.n < 1:
                raise CliError("--n must be at least 1", EXIT_USAGE)
            return cmd_gen(args.n, args.dist, args.seed, args.out)
        fields = {f: getattr(args, f) for f in RunConfig.__dataclass_fields__
                  if hasattr(args, f)}
        cfg = RunConfig(**fields)
        if args.command == "build":
            return cmd_build(cfg)
        if args.command == "query":
            return cmd_query(cfg, args.point)
        if args.command == "batch":
            return cmd_batch(cfg)
        if args.command == "bench":
            return cmd_bench(cfg, args.oracle_sample)
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "contours":
            return cmd_contours(cfg, args.hulls)
        if args.command == "prep":
            return cmd_prep(cfg, args.out_queries)
    except CliError as exc:
        print(f"mrtop: {exc}", file=sys.stderr)
        return exc.code
    except IngestError as exc:
        print(f"mrtop: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except IndexFormatError as exc:
        print(f"mrtop: {exc}", file=sys.stderr)
        return EXIT_QUERY
    except MrtopError as exc:
        print(f"mrtop: {exc}", file=sys.stderr)
        return EXIT_QUERY
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

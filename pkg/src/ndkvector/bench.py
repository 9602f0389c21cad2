"""Benchmark harness: synthetic data, equal-marginal queries, timed comparisons."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import brute_force_search, kdtree_build, kdtree_search
from .build import default_n_db, default_n_k, partition_counts, preprocess
from .core import Dataset, NDKVError, QueryResult, RangeQuery
from .search import search
from .variants import search_no_index, search_no_kvector

log = logging.getLogger(__name__)

ALGOS = ("ndkv", "ndkv-noindex", "ndkv-nokv", "ndkv-nokv-noindex", "brute", "kdtree")
DEFAULT_ALGOS = ("ndkv", "ndkv-noindex", "ndkv-nokv", "brute", "kdtree")


class BenchmarkMismatch(NDKVError):
    """Two algorithms disagreed on a query's result set."""


@dataclass
class BenchRecord:
    algo: str
    n: int
    d: int
    n_db: int
    n_k: int
    fraction: float
    retrieved: int
    repeats: int
    mean_s: float
    min_s: float
    max_s: float
    examined: int
    preprocess_s: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class BenchConfig:
    n: Sequence[int] = (100_000,)
    d: Sequence[int] = (6,)
    fractions: Sequence[float] = (0.05,)
    algos: Sequence[str] = DEFAULT_ALGOS
    repeats: int = 100
    seed: int = 42
    n_db: int | None = None
    n_k: int | None = None
    distribution: str = "uniform"
    workers: int | None = None
    leaf_size: int = 8


def generate_dataset(n: int, d: int, distribution: str = "uniform", seed: int = 0) -> Dataset:
    """Synthetic points in ``[0, 1)^d``.

    ``clustered`` puts 99% of the points in a cube of side 1e-4 around a random
    centre, which defeats the linear grid of a 1-D k-vector.
    """
    if n < 1 or d < 1:
        raise NDKVError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        return Dataset(rng.random((n, d)))
    if distribution == "clustered":
        pts = rng.random((n, d))
        dense = int(round(0.99 * n))
        centre = rng.uniform(0.1, 0.9, size=d)
        pts[:dense] = centre + (rng.random((dense, d)) - 0.5) * 1e-4
        return Dataset(pts)
    raise NDKVError(f"unknown distribution {distribution!r}")


def generate_query(ds: Dataset, fraction: float, seed: int = 0) -> RangeQuery:
    """Box whose every marginal holds about ``fraction ** (1/d)`` of the points.

    Each dimension gets a random window of that quantile width, placed so it
    never leaves the data hull; independent coordinates then give a joint
    retrieval near ``fraction``.
    """
    if not 0 < fraction <= 1:
        raise NDKVError(f"fraction must be in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    n, d = ds.n, ds.d
    width = fraction ** (1.0 / d)
    span = max(1, int(math.ceil(width * n)))
    lo = np.empty(d)
    hi = np.empty(d)
    for j in range(d):
        col = np.sort(ds.points[:, j])
        first = int(rng.integers(0, n - span + 1))
        lo[j] = col[first]
        hi[j] = col[first + span - 1]
    return RangeQuery(lo, hi)


def _runner(algo: str, ds: Dataset, cfg: BenchConfig) -> tuple[Callable[[RangeQuery], QueryResult], float, int, int]:
    """Return ``(query_fn, preprocess_seconds, n_db, n_k)`` for one algorithm."""
    n_db = cfg.n_db or default_n_db(ds.n)
    n_db = min(n_db, ds.n)
    n_k = cfg.n_k or default_n_k(partition_counts(ds.n, n_db)[1])
    t0 = time.perf_counter()
    if algo == "brute":
        return (lambda q: brute_force_search(ds, q)), 0.0, 0, 0
    if algo == "kdtree":
        tree = kdtree_build(ds, cfg.leaf_size)
        return (lambda q: kdtree_search(tree, q)), time.perf_counter() - t0, 0, 0
    if algo == "ndkv":
        pre = preprocess(ds, n_db, n_k)
        el = time.perf_counter() - t0
        return (lambda q: search(pre, q, workers=cfg.workers)), el, n_db, n_k
    if algo == "ndkv-noindex":
        pre = preprocess(ds, n_db, n_k, index=False)
        el = time.perf_counter() - t0
        return (lambda q: search_no_index(pre, q)), el, n_db, n_k
    if algo == "ndkv-nokv":
        pre = preprocess(ds, n_db, n_k, kvector=False)
        el = time.perf_counter() - t0
        return (lambda q: search_no_kvector(pre, q)), el, n_db, 0
    if algo == "ndkv-nokv-noindex":
        pre = preprocess(ds, n_db, n_k, index=False, kvector=False)
        el = time.perf_counter() - t0
        return (lambda q: search_no_kvector(pre, q)), el, n_db, 0
    raise NDKVError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGOS)}")


def time_query(fn: Callable[[RangeQuery], QueryResult], q: RangeQuery, repeats: int) -> tuple[QueryResult, np.ndarray]:
    res = fn(q)  # warm-up, also triggers compilation
    times = np.empty(repeats)
    for r in range(repeats):
        t0 = time.perf_counter()
        fn(q)
        times[r] = time.perf_counter() - t0
    return res, times


def run_benchmark(cfg: BenchConfig, on_record: Callable[[BenchRecord], None] | None = None) -> list[BenchRecord]:
    """Run every algorithm on every (n, d, fraction) grid point.

    Result sets are compared across algorithms before anything is recorded;
    a disagreement raises :class:`BenchmarkMismatch`.
    """
    for a in cfg.algos:
        if a not in ALGOS:
            raise NDKVError(f"unknown algorithm {a!r}; choose from {', '.join(ALGOS)}")
    records: list[BenchRecord] = []
    for n in cfg.n:
        for d in cfg.d:
            ds = generate_dataset(n, d, cfg.distribution, cfg.seed)
            runners = {a: _runner(a, ds, cfg) for a in cfg.algos}
            for qi, f in enumerate(cfg.fractions):
                q = generate_query(ds, f, cfg.seed + 1 + qi)
                reference = None
                pending = []
                for a, (fn, pre_s, n_db, n_k) in runners.items():
                    res, times = time_query(fn, q, cfg.repeats)
                    ids = res.sorted_ids()
                    if reference is None:
                        reference = (a, ids)
                    elif not np.array_equal(ids, reference[1]):
                        raise BenchmarkMismatch(
                            f"n={n} d={d} fraction={f}: {a} returned {ids.size} ids, "
                            f"{reference[0]} returned {reference[1].size}"
                        )
                    label = a if not (a == "ndkv" and cfg.workers and cfg.workers > 1) else f"ndkv[threads={cfg.workers}]"
                    pending.append(BenchRecord(
                        label, n, d, n_db, n_k, f, int(ids.size), cfg.repeats,
                        float(times.mean()), float(times.min()), float(times.max()),
                        int(res.examined), float(pre_s),
                    ))
                for rec in pending:
                    log.info("%s", rec)
                    records.append(rec)
                    if on_record:
                        on_record(rec)
    return records


def write_records(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BenchRecord.columns())
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


def read_records(path) -> list[BenchRecord]:
    types = {f.name: f.type for f in fields(BenchRecord)}
    conv = {"str": str, "int": int, "float": float}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(BenchRecord(**{k: conv[types[k]](v) for k, v in row.items()}))
    return out

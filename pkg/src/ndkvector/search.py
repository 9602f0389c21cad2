"""n-dimensional k-vector query pipeline.

Per sub-database: map each query interval onto the k-vector grid, estimate
how many elements fall in each dimension's window, skip the sub-database if
any window is empty, pick the projection dimension, trim the window to exact
rank bounds and brute-force the remaining dimensions on the survivors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .build import LineParams, PreprocessedDatabase
from .core import NDKVError, QueryResult, RangeQuery, validate_query

TRIM_THRESHOLD = 10.0
RATIO_SLOPE = 1.5
RATIO_OFFSET = 3.0

_FORCE = {"auto": -1, "linear": _kernels.LINEAR, "binary": _kernels.BINARY}
_MODE_NAME = {_kernels.LINEAR: "linear", _kernels.BINARY: "binary"}


@dataclass(frozen=True)
class WindowBounds:
    A: int
    B: int
    empty: bool


@dataclass(frozen=True)
class DimCounts:
    p: np.ndarray
    g: np.ndarray
    order: np.ndarray
    windows: tuple[WindowBounds, ...] = ()


@dataclass
class SubdbTrace:
    """What one sub-database search did, for tests and diagnostics."""

    subdb: int
    skipped: bool
    counts: DimCounts | None = None
    dimension: int | None = None
    window: tuple[int, int] | None = None
    trimmed: tuple[int, int] | None = None
    candidates: np.ndarray | None = None
    matches: np.ndarray | None = None
    trim_modes: tuple[str, str] | None = None


def map_range(line: LineParams, a: float, b: float, n_k: int, cmin: float | None = None) -> WindowBounds:
    """Grid window of ``[a, b]`` under ``line``.

    ``cmin`` is the column value and is only consulted for constant columns.
    """
    if a > b:
        raise NDKVError(f"inverted interval [{a}, {b}]")
    if line.constant and cmin is None:
        cmin = -line.q / line.m
    A, B, empty = _kernels.map_range(
        line.m, line.q, line.constant, 0.0 if cmin is None else cmin, n_k, a, b
    )
    return WindowBounds(int(A), int(B), bool(empty))


def estimate_counts(pre: PreprocessedDatabase, s: int, q: RangeQuery) -> DimCounts:
    """Approximate per-dimension element counts of sub-database ``s``."""
    if not pre.has_kvector:
        raise NDKVError("k-vector arrays were not built for this variant")
    kd = pre.lines.shape[1]
    p = np.zeros(kd, dtype=np.int64)
    wins = []
    for j in range(kd):
        w = map_range(pre.line(s, j), q.lo[j], q.hi[j], pre.n_k, pre.col_min[s, j])
        wins.append(w)
        if not w.empty:
            kv = pre.kvec[s, j]
            p[j] = kv[w.B] - kv[w.A]
    order = np.argsort(p, kind="stable")
    return DimCounts(p, p[order], order, tuple(wins))


def projection_ratio(n_p: int, slope: float = RATIO_SLOPE, offset: float = RATIO_OFFSET) -> float:
    """Sequential-versus-random access ratio, never below 1."""
    return float(_kernels.projection_ratio(n_p, slope, offset))


def select_projection_dimension(
    counts: DimCounts, n_p: int, slope: float = RATIO_SLOPE, offset: float = RATIO_OFFSET
) -> int:
    p = np.asarray(counts.p, dtype=np.int64)
    if not (p > 0).any():
        raise NDKVError("no dimension has a non-empty window")
    return int(_kernels.choose_dimension(p, projection_ratio(n_p, slope, offset)))


def trim_mode_select(boundary_count: int, expected: float, threshold: float = TRIM_THRESHOLD) -> str:
    return _MODE_NAME[_kernels.trim_mode(boundary_count, expected, threshold)]


def trim_extremes(
    pre: PreprocessedDatabase,
    s: int,
    j: int,
    window: WindowBounds,
    a: float,
    b: float,
    mode: str = "auto",
    threshold: float = TRIM_THRESHOLD,
) -> tuple[int, int, int, tuple[str, str]]:
    """Exact sorted-position bounds ``[lo, hi)`` of ``[a, b]`` in dimension ``j``.

    Returns ``(lo, hi, steps, (lower_mode, upper_mode))``.
    """
    if window.empty:
        start = pre.structure.subdb_start(s)
        return start, start, 0, ("linear", "linear")
    n_p = pre.structure.subdb_slice(s).stop - pre.structure.subdb_start(s)
    lo, hi, steps, m_lo, m_hi = _kernels.trim_window(
        pre.points, _index_or_dummy(pre), j, pre.kvec[s, j], window.A, window.B,
        a, b, n_p / pre.n_k, threshold, _FORCE[mode],
    )
    return int(lo), int(hi), int(steps), (_MODE_NAME[m_lo], _MODE_NAME[m_hi])


def search_subdatabase(
    pre: PreprocessedDatabase, s: int, q: RangeQuery, mode: str = "auto"
) -> SubdbTrace:
    """Search one sub-database and report every intermediate step."""
    if not (pre.has_kvector and pre.has_index):
        raise NDKVError("search_subdatabase needs the full variant")
    d = pre.d
    counts = estimate_counts(pre, s, q)
    if any(w.empty for w in counts.windows) or (counts.p == 0).any():
        return SubdbTrace(s, True, counts)
    sl = pre.structure.subdb_slice(s)
    js = select_projection_dimension(counts, sl.stop - sl.start)
    w = counts.windows[js]
    kv = pre.kvec[s, js]
    lo, hi, _, modes = trim_extremes(pre, s, js, w, q.lo[js], q.hi[js], mode)
    positions = np.arange(lo, hi, dtype=np.int64)
    rows = positions if js == 0 else pre.index.maps[js - 1, lo:hi]
    check = [int(c) for c in counts.order if c != js]
    last = d - 1
    if last != js and pre.col_min[s, last] >= q.lo[last] and pre.col_max[s, last] <= q.hi[last]:
        check.remove(last)
    keep = np.ones(rows.size, dtype=bool)
    for c in check:
        vals = pre.points[rows, c]
        keep &= (vals >= q.lo[c]) & (vals <= q.hi[c])
    return SubdbTrace(
        s, False, counts, js, (int(kv[w.A]), int(kv[w.B])), (lo, hi), rows, rows[keep], modes
    )


def _index_or_dummy(pre: PreprocessedDatabase) -> np.ndarray:
    if pre.index is not None:
        return pre.index.maps
    return np.empty((0, 0), dtype=np.int64)


def _finish(parts: tuple) -> QueryResult:
    """Wrap a kernel's ``(result, examined, steps, skipped, searched)``."""
    res, examined, steps, skipped, searched = parts
    return QueryResult(res[0], res[1], examined, steps, {"skipped": skipped, "searched": searched})


def _full_params(mode: str, threshold: float, ratio: tuple[float, float]) -> np.ndarray:
    if mode not in _FORCE:
        raise NDKVError(f"unknown trim mode {mode!r}; choose from {', '.join(_FORCE)}")
    return np.array([ratio[0], ratio[1], threshold, _FORCE[mode]], dtype=np.float64)


_DEFAULT_PARAMS = _full_params("auto", TRIM_THRESHOLD, (RATIO_SLOPE, RATIO_OFFSET))


def search(
    pre: PreprocessedDatabase,
    q: RangeQuery,
    *,
    mode: str = "auto",
    threshold: float = TRIM_THRESHOLD,
    ratio: tuple[float, float] = (RATIO_SLOPE, RATIO_OFFSET),
    workers: int | None = None,
) -> QueryResult:
    """Orthogonal range query on a fully preprocessed database.

    ``workers > 1`` splits the sub-databases across threads; the compiled
    kernel releases the GIL and each chunk writes to its own buffer.
    """
    if pre.index is None or pre.kvec is None:
        raise NDKVError(f"search needs the full variant, database is {pre.variant!r}")
    validate_query(q, pre.d)
    if mode == "auto" and threshold == TRIM_THRESHOLD and ratio == (RATIO_SLOPE, RATIO_OFFSET):
        params = _DEFAULT_PARAMS
    else:
        params = _full_params(mode, threshold, ratio)
    args = (pre.points, pre.index.maps, pre.geo, pre.kvec, pre.starts, pre.perm, q.box)
    if not workers or workers <= 1 or pre.n_db == 1:
        return _finish(_kernels.search_full(*args, 0, pre.n_db, params))

    bounds = np.linspace(0, pre.n_db, min(workers, pre.n_db) + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=len(bounds) - 1) as ex:
        parts = list(ex.map(
            lambda i: _kernels.search_full(*args, int(bounds[i]), int(bounds[i + 1]), params),
            range(len(bounds) - 1),
        ))
    merged = [np.concatenate([p[0] for p in parts], axis=1)]
    merged += [sum(p[t] for p in parts) for t in range(1, 5)]
    return _finish(tuple(merged))

"""Memory-reduced searches.

``search_no_index`` drops the index arrays and keeps dimension-0 k-vectors
only; the sub-databases to visit come from a binary search over their
last-dimension minima.  ``search_no_kvector`` drops the k-vector and line
arrays and locates every window with two binary searches; without index
arrays as well it degenerates to the minima run plus dimension-0 searches.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .build import PreprocessedDatabase
from .core import NDKVError, QueryResult, RangeQuery, validate_query
from .search import RATIO_OFFSET, RATIO_SLOPE, TRIM_THRESHOLD, _FORCE, _finish


def subdb_run(pre: PreprocessedDatabase, a: float, b: float) -> tuple[int, int]:
    """Sub-databases ``[s_lo, s_hi)`` that can hold last-dimension values in ``[a, b]``."""
    s_lo, s_hi = _kernels.subdb_run(pre.submin, a, b)
    return int(s_lo), int(s_hi)


def search_no_index(
    pre: PreprocessedDatabase, q: RangeQuery, *, mode: str = "auto", threshold: float = TRIM_THRESHOLD
) -> QueryResult:
    if pre.kvec is None:
        raise NDKVError("search_no_index needs dimension-0 k-vector arrays")
    if mode not in _FORCE:
        raise NDKVError(f"unknown trim mode {mode!r}; choose from {', '.join(_FORCE)}")
    validate_query(q, pre.d)
    params = np.array([threshold, _FORCE[mode]], dtype=np.float64)
    return _finish(_kernels.search_noindex(
        pre.points, pre.lines0, pre.kvec0, pre.spans, pre.starts, pre.perm, q.box, params
    ))


def search_no_kvector(
    pre: PreprocessedDatabase,
    q: RangeQuery,
    *,
    ratio: tuple[float, float] = (RATIO_SLOPE, RATIO_OFFSET),
) -> QueryResult:
    """Binary-search windows; uses the index arrays when they exist."""
    validate_query(q, pre.d)
    if pre.index is not None:
        params = np.array(ratio, dtype=np.float64)
        return _finish(_kernels.search_nokv(
            pre.points, pre.index.maps, pre.spans, pre.starts, pre.perm, q.box, params
        ))
    return _finish(_kernels.search_bare(pre.points, pre.spans, pre.starts, pre.perm, q.box))


def exact_counts(pre: PreprocessedDatabase, s: int, q: RangeQuery) -> np.ndarray:
    """Exact per-dimension counts of sub-database ``s`` via binary searches."""
    if not pre.has_index and pre.d > 1:
        raise NDKVError("exact per-dimension counts need the index arrays")
    sl = pre.structure.subdb_slice(s)
    idx = pre.index.maps if pre.has_index else np.empty((0, 0), dtype=np.int64)
    p = np.empty(pre.d, dtype=np.int64)
    for j in range(pre.d):
        lo, _ = _kernels.lower_bound(pre.points, idx, j, sl.start, sl.stop, q.lo[j])
        hi, _ = _kernels.upper_bound(pre.points, idx, j, lo, sl.stop, q.hi[j])
        p[j] = hi - lo
    return p


def search_variant(pre: PreprocessedDatabase, q: RangeQuery, **kw) -> QueryResult:
    """Dispatch on whichever auxiliary arrays ``pre`` carries."""
    from .search import search

    variant = pre.variant
    if variant == "full":
        return search(pre, q, **kw)
    if variant == "noindex":
        return search_no_index(pre, q, **{k: v for k, v in kw.items() if k in ("mode", "threshold")})
    return search_no_kvector(pre, q, **{k: v for k, v in kw.items() if k == "ratio"})

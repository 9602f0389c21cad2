"""One-time preprocessing: two-level sorted layout plus the auxiliary arrays.

The structured table is sorted on the last dimension, cut into contiguous
sub-databases, and each sub-database is re-sorted on dimension 0.  On top of
that layout three auxiliary arrays are built per sub-database:

* index arrays: for every dimension ``j >= 1`` the global structured indexes of
  the sub-database's elements in ascending order of coordinate ``j``;
* line params: slope/intercept ``(m, q)`` of the grid line
  ``z(i) = i / m - q / m`` spanning the column's range;
* k-vector arrays: ``k(i) = start + #{v : v < z(i)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Dataset, NDKVError

EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class LineParams:
    """Grid line ``i = m * z + q`` over ``n_k`` points.

    ``constant`` marks a column whose values are all equal; its k-vector keeps
    every interior entry at the sub-database start.
    """

    m: float
    q: float
    constant: bool = False

    def z(self, i):
        return np.asarray(i, dtype=np.float64) / self.m - self.q / self.m

    def t(self, v):
        return self.m * np.asarray(v, dtype=np.float64) + self.q


@dataclass(frozen=True)
class StructuredDatabase:
    points: np.ndarray  # (n, d), structured order
    perm: np.ndarray  # structured index -> original id
    n_db: int
    n_p: int
    n_p_first: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def starts(self) -> np.ndarray:
        """Boundaries of the sub-databases, length ``n_db + 1``."""
        return subdb_offsets(self.n, self.n_db)

    def subdb_start(self, s: int) -> int:
        if not 0 <= s < self.n_db:
            raise IndexError(f"sub-database {s} out of range [0, {self.n_db})")
        return 0 if s == 0 else self.n_p_first + (s - 1) * self.n_p

    def subdb_slice(self, s: int) -> slice:
        start = self.subdb_start(s)
        size = self.n_p_first if s == 0 else self.n_p
        return slice(start, start + size)


@dataclass(frozen=True)
class IndexArray:
    """Row ``j - 1`` of :attr:`maps` holds the index map of dimension ``j``."""

    maps: np.ndarray  # (d - 1, n) int64

    def for_dim(self, j: int) -> np.ndarray:
        if j == 0:
            raise ValueError("dimension 0 has no stored index map (identity)")
        return self.maps[j - 1]


@dataclass
class PreprocessedDatabase:
    """Structured table plus whichever auxiliary arrays the variant keeps.

    ``lines`` is ``(n_db, kv_dims, 2)`` holding ``(m, q)``; ``kvec`` is
    ``(n_db, kv_dims, n_k)``.  ``kv_dims`` is ``d`` when the index arrays are
    present and 1 otherwise, since without index maps only dimension 0 can be
    projected.
    """

    structure: StructuredDatabase
    n_k: int
    index: IndexArray | None
    lines: np.ndarray | None
    kvec: np.ndarray | None
    submin: np.ndarray
    # derived, rebuilt on load
    constant: np.ndarray | None = field(default=None, repr=False)
    col_min: np.ndarray = field(default=None, repr=False)
    col_max: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.col_min is None or self.col_max is None:
            self.col_min, self.col_max = column_spans(self.structure)
        if self.lines is not None and self.constant is None:
            kd = self.lines.shape[1]
            self.constant = self.col_min[:, :kd] == self.col_max[:, :kd]
        self._starts = self.structure.starts
        self.spans = np.ascontiguousarray(np.stack([self.col_min, self.col_max]))
        self.spans.setflags(write=False)
        self._starts.setflags(write=False)
        self.last_max = float(self.col_max[-1, self.d - 1])
        if self.lines is not None:
            # (m, q, min, max) side by side: one cache line per probe
            kd = self.lines.shape[1]
            self.geo = np.ascontiguousarray(np.concatenate(
                [self.lines, self.col_min[:, :kd, None], self.col_max[:, :kd, None]], axis=2
            ))
            self.geo.setflags(write=False)
            # dimension-0 slices for the reduced searches, laid out once
            self.lines0 = np.ascontiguousarray(self.lines[:, :1])
            self.kvec0 = np.ascontiguousarray(self.kvec[:, :1])
            self.constant0 = np.ascontiguousarray(self.constant[:, :1])

    @property
    def points(self) -> np.ndarray:
        return self.structure.points

    @property
    def perm(self) -> np.ndarray:
        return self.structure.perm

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def d(self) -> int:
        return self.structure.d

    @property
    def n_db(self) -> int:
        return self.structure.n_db

    @property
    def starts(self) -> np.ndarray:
        return self._starts

    @property
    def has_index(self) -> bool:
        return self.index is not None

    @property
    def has_kvector(self) -> bool:
        return self.kvec is not None

    @property
    def variant(self) -> str:
        if self.has_index and self.has_kvector:
            return "full"
        if self.has_kvector:
            return "noindex"
        if self.has_index:
            return "nokv"
        return "nokv-noindex"

    def line(self, s: int, j: int) -> LineParams:
        m, q = self.lines[s, j]
        return LineParams(float(m), float(q), bool(self.constant[s, j]))

    def kvector(self, s: int, j: int) -> np.ndarray:
        return self.kvec[s, j]

    def sorted_positions(self, s: int, j: int) -> np.ndarray:
        """Global structured indexes of sub-database ``s`` in ascending dim ``j``."""
        sl = self.structure.subdb_slice(s)
        if j == 0:
            return np.arange(sl.start, sl.stop, dtype=np.int64)
        if self.index is None:
            raise NDKVError("index arrays were not built for this variant")
        return self.index.maps[j - 1, sl]

    def aux_size(self) -> dict[str, int]:
        """Number of stored auxiliary numbers per array."""
        return {
            "index": 0 if self.index is None else int(self.index.maps.size),
            "kvector": 0 if self.kvec is None else int(self.kvec.size),
            "lines": 0 if self.lines is None else int(self.lines.size),
            "minima": int(self.submin.size),
        }


def partition_counts(n: int, n_db: int) -> tuple[int, int]:
    """Return ``(n_p_first, n_p)``; the first sub-database takes the remainder."""
    if not 1 <= n_db <= n:
        raise NDKVError(f"sub-database count {n_db} outside [1, {n}]")
    n_p = n // n_db
    return n - n_p * (n_db - 1), n_p


def subdb_offsets(n: int, n_db: int) -> np.ndarray:
    first, n_p = partition_counts(n, n_db)
    starts = np.empty(n_db + 1, dtype=np.int64)
    starts[0] = 0
    starts[1:] = first + n_p * np.arange(n_db, dtype=np.int64)
    return starts


def default_n_db(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def default_n_k(n_p: int) -> int:
    return max(2, math.ceil(n_p / 10))


def _settle_ties(order: np.ndarray, keys: np.ndarray, breaks: np.ndarray | None = None) -> np.ndarray:
    """Make an unstable argsort stable in place.

    ``order`` lists positions sorted by value and ``keys`` the values in that
    order.  Runs of equal values (not crossing a position in ``breaks``) are
    reordered by ascending position, which is exactly what a stable sort
    yields.
    """
    eq = keys[1:] == keys[:-1]
    if breaks is not None and breaks.size:
        eq[breaks - 1] = False
    if not eq.any():
        return order
    tied = np.zeros(order.size, dtype=bool)
    tied[1:] |= eq
    tied[:-1] |= eq
    pos = np.flatnonzero(tied)
    run = np.cumsum(np.concatenate(([True], ~eq)))[pos]
    sel = order[pos]
    order[pos] = sel[np.lexsort((sel, run))]
    return order


def _stable_argsort(values: np.ndarray) -> np.ndarray:
    # the default introsort is several times faster than the stable sorts on
    # float64; ties are rare and settled afterwards
    order = np.argsort(values)
    return _settle_ties(order, values[order])


def _blockwise_argsort(values: np.ndarray, first: int, n_p: int) -> np.ndarray:
    """Stable argsort of ``values`` within each sub-database block.

    Returns global positions: block ``s`` of the output holds the positions of
    block ``s`` of ``values`` in ascending value order, ties keeping position
    order.  All blocks after the first have ``n_p`` entries, so they are sorted
    together as the rows of one matrix.
    """
    out = np.empty(values.size, dtype=np.int64)
    out[:first] = np.argsort(values[:first])
    rest = values.size - first
    if rest:
        rows = values[first:].reshape(-1, n_p)
        local = np.argsort(rows, axis=1)
        local += (first + n_p * np.arange(rows.shape[0], dtype=np.int64))[:, None]
        out[first:] = local.ravel()
    breaks = np.arange(first, values.size, n_p) if rest else None
    return _settle_ties(out, values[out], breaks)


def build_structure(ds: Dataset, n_db: int) -> StructuredDatabase:
    n, d = ds.n, ds.d
    first, n_p = partition_counts(n, n_db)
    pts = ds.points
    by_last = _stable_argsort(pts[:, d - 1])
    # stable within-block sort: ties in dim 0 keep their last-dimension order
    within = _blockwise_argsort(pts[by_last, 0], first, n_p)
    perm = by_last[within].astype(np.int64)
    structured = np.take(pts, perm, axis=0)
    structured.setflags(write=False)
    perm.setflags(write=False)
    return StructuredDatabase(structured, perm, n_db, n_p, first)


def build_index_arrays(sdb: StructuredDatabase, columns: np.ndarray | None = None) -> IndexArray:
    """Per-dimension orderings; ``columns`` optionally supplies ``points.T`` contiguously."""
    n, d = sdb.n, sdb.d
    if columns is None:
        columns = np.ascontiguousarray(sdb.points.T)
    maps = np.empty((max(d - 1, 0), n), dtype=np.int64)
    for j in range(1, d):
        maps[j - 1] = _blockwise_argsort(columns[j], sdb.n_p_first, sdb.n_p)
    maps.setflags(write=False)
    return IndexArray(maps)


def _line_arrays(lo: np.ndarray, hi: np.ndarray, n_k: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised line construction with the bracketing guard.

    The guard ``(n_k - 1) * eps * max(1, |lo|, |hi|)`` is doubled wherever the
    rounded grid endpoints fail to bracket ``[lo, hi]`` strictly.
    """
    shape = np.shape(lo)
    lo = np.asarray(lo, dtype=np.float64).ravel()
    hi = np.asarray(hi, dtype=np.float64).ravel()
    scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    guard = (n_k - 1) * EPS * scale
    top = float(n_k - 1)
    m = np.empty_like(lo)
    q = np.empty_like(lo)
    todo = np.ones(lo.shape, dtype=bool)
    for _ in range(64):
        if not todo.any():
            break
        mm = top / (hi[todo] - lo[todo] + 2.0 * guard[todo])
        qq = -mm * (lo[todo] - guard[todo])
        m[todo] = mm
        q[todo] = qq
        ok = (0.0 / mm - qq / mm < lo[todo]) & (top / mm - qq / mm > hi[todo])
        idx = np.flatnonzero(todo)
        todo[idx[ok]] = False
        guard[idx[~ok]] *= 2.0
    if todo.any():
        raise NDKVError("could not place a bracketing grid line")
    return m.reshape(shape), q.reshape(shape)


def build_mapping_line(lo: float, hi: float, n_k: int) -> LineParams:
    """Line through ``(0, lo - g)`` and ``(n_k - 1, hi + g)`` for a small guard ``g``."""
    if n_k < 2:
        raise NDKVError(f"n_k must be at least 2, got {n_k}")
    if not lo <= hi:
        raise NDKVError(f"line range inverted: {lo} > {hi}")
    m, q = _line_arrays(np.array([lo]), np.array([hi]), n_k)
    return LineParams(float(m[0]), float(q[0]), constant=bool(lo == hi))


def build_kvector_array(
    values: np.ndarray, line: LineParams, n_k: int, subdb_start: int = 0
) -> np.ndarray:
    """k-vector of one ascending column: ``k(i) = start + #{v < z(i)}``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    out = np.empty(n_k, dtype=np.int64)
    _kernels.fill_kvector(
        values, 0, values.size, line.m, line.q, line.constant, subdb_start, out
    )
    return out


def column_spans(sdb: StructuredDatabase) -> tuple[np.ndarray, np.ndarray]:
    starts = sdb.starts[:-1]
    return (
        np.minimum.reduceat(sdb.points, starts, axis=0),
        np.maximum.reduceat(sdb.points, starts, axis=0),
    )


def preprocess(
    ds: Dataset,
    n_db: int | None = None,
    n_k: int | None = None,
    *,
    index: bool = True,
    kvector: bool = True,
) -> PreprocessedDatabase:
    """Build the structured table and the auxiliary arrays of the chosen variant."""
    if n_db is None:
        n_db = default_n_db(ds.n)
    sdb = build_structure(ds, n_db)
    if n_k is None:
        n_k = default_n_k(sdb.n_p)
    if n_k < 2:
        raise NDKVError(f"n_k must be at least 2, got {n_k}")
    columns = np.ascontiguousarray(sdb.points.T)
    idx = build_index_arrays(sdb, columns) if index else None
    col_min, col_max = column_spans(sdb)
    submin = np.ascontiguousarray(col_min[:, sdb.d - 1])

    lines = kvec = constant = None
    if kvector:
        kv_dims = sdb.d if index else 1
        m, q = _line_arrays(col_min[:, :kv_dims], col_max[:, :kv_dims], n_k)
        lines = np.ascontiguousarray(np.stack([m, q], axis=-1))
        constant = col_min[:, :kv_dims] == col_max[:, :kv_dims]
        kvec = np.empty((sdb.n_db, kv_dims, n_k), dtype=np.int64)
        starts = sdb.starts
        for j in range(kv_dims):
            if j == 0:
                col = columns[0]
            else:
                col = columns[j][idx.maps[j - 1]]
            _kernels.fill_kvector_all(
                col, starts, lines[:, j, 0], lines[:, j, 1], constant[:, j], kvec[:, j, :]
            )
    return PreprocessedDatabase(
        sdb, n_k, idx, lines, kvec, submin, constant=constant, col_min=col_min, col_max=col_max
    )

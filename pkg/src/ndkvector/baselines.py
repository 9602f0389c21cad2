"""Reference searches: full linear scan and a median-split k-d tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Dataset, QueryResult, RangeQuery, validate_query


def brute_force_search(ds: Dataset, q: RangeQuery) -> QueryResult:
    """Check every point, leaving each at its first failing dimension."""
    validate_query(q, ds.d)
    return QueryResult(_kernels.brute_force(ds.points, q.box), examined=ds.n)


@dataclass(frozen=True)
class KdTree:
    """Array-backed k-d tree; node ``i`` covers ``idx[node_lo[i]:node_hi[i]]``.

    Splits at the median of the (value, original id) order on dimension
    ``depth % d``, so the layout is deterministic even with duplicate values.
    """

    points: np.ndarray
    idx: np.ndarray
    node_lo: np.ndarray
    node_hi: np.ndarray
    split_dim: np.ndarray
    split_val: np.ndarray
    left: np.ndarray
    right: np.ndarray
    bbox: np.ndarray
    leaf_size: int

    @property
    def n_nodes(self) -> int:
        return self.node_lo.size

    @property
    def d(self) -> int:
        return self.points.shape[1]


def kdtree_build(ds: Dataset, leaf_size: int = 8) -> KdTree:
    if leaf_size < 1:
        raise ValueError("leaf_size must be positive")
    parts = _kernels.kdtree_build(ds.points, leaf_size)
    return KdTree(ds.points, *parts, leaf_size=leaf_size)


def kdtree_search(tree: KdTree, q: RangeQuery) -> QueryResult:
    validate_query(q, tree.d)
    ids, examined, visited = _kernels.kdtree_query(
        tree.points, tree.idx, tree.node_lo, tree.node_hi, tree.left, tree.right, tree.bbox, q.box
    )
    return QueryResult(ids, examined=examined, stats={"visited": visited})

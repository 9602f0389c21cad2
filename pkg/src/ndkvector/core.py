"""Domain types shared by the index builders, searchers and baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class NDKVError(ValueError):
    """Base class for all validation errors raised by this package."""


class DimensionMismatchError(NDKVError):
    pass


class InvertedIntervalError(NDKVError):
    pass


class NonFiniteError(NDKVError):
    pass


class InvalidDatasetError(NDKVError):
    pass


@dataclass(frozen=True)
class Dataset:
    """An immutable table of ``n`` points with ``d`` finite coordinates each.

    Row ``i`` of :attr:`points` carries original identifier ``i``.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise InvalidDatasetError(f"points must be 2-D, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidDatasetError(f"need n >= 1 and d >= 1, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise NonFiniteError("dataset contains NaN or infinite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "Dataset":
        rows = [list(r) for r in rows]
        if not rows:
            raise InvalidDatasetError("empty dataset")
        width = len(rows[0])
        for i, r in enumerate(rows):
            if len(r) != width:
                raise InvalidDatasetError(f"row {i} has {len(r)} coordinates, expected {width}")
        return cls(np.asarray(rows, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class RangeQuery:
    """Inclusive box ``lo[j] <= x[j] <= hi[j]`` for every dimension ``j``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.lo, dtype=np.float64, copy=True).reshape(-1)
        hi = np.array(self.hi, dtype=np.float64, copy=True).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatchError(
                f"lower bounds have {lo.size} entries, upper bounds {hi.size}"
            )
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        # the bounds are frozen, so their well-formedness is checked once here
        # and reported by validate_query on every search
        object.__setattr__(self, "_problem", _bound_problem(lo, hi))
        box = np.stack([lo, hi])
        box.setflags(write=False)
        object.__setattr__(self, "_box", box)

    @classmethod
    def from_bounds(cls, bounds: Iterable[Sequence[float]]) -> "RangeQuery":
        pairs = [tuple(b) for b in bounds]
        for b in pairs:
            if len(b) != 2:
                raise NDKVError(f"bound {b!r} is not an (a, b) pair")
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def parse(cls, text: str) -> "RangeQuery":
        """Parse ``"a0:b0,a1:b1,..."``."""
        pairs = []
        for chunk in text.split(","):
            parts = chunk.strip().split(":")
            if len(parts) != 2:
                raise NDKVError(f"malformed range component {chunk!r}, expected a:b")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise NDKVError(f"non-numeric range component {chunk!r}") from exc
        return cls.from_bounds(pairs)

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def box(self) -> np.ndarray:
        """``(2, d)`` array stacking :attr:`lo` over :attr:`hi`."""
        return self._box

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.lo, self.hi)]

    def contains(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(self.lo <= p) and np.all(p <= self.hi))


def _bound_problem(lo: np.ndarray, hi: np.ndarray) -> NDKVError | None:
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        return NonFiniteError("query bounds must be finite")
    bad = np.flatnonzero(lo > hi)
    if bad.size:
        j = int(bad[0])
        return InvertedIntervalError(
            f"dimension {j}: lower bound {lo[j]} exceeds upper bound {hi[j]}"
        )
    return None


def validate_query(q: RangeQuery, d: int) -> RangeQuery:
    """Return ``q`` unchanged if it is a well-formed ``d``-dimensional box."""
    if q.lo.size != d:
        raise DimensionMismatchError(f"query has {q.d} dimensions, database has {d}")
    if q._problem is not None:
        raise type(q._problem)(*q._problem.args)
    return q


@dataclass
class QueryResult:
    """Original row ids matching a query, in no particular order.

    ``examined`` counts candidate verifications (points whose coordinates were
    compared against the box after any index-based narrowing).
    """

    ids: np.ndarray
    structured: np.ndarray | None = None
    examined: int = 0
    trim_steps: int = 0
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.ids.size)

    def sorted_ids(self) -> np.ndarray:
        return np.sort(self.ids)

    def id_set(self) -> frozenset[int]:
        return frozenset(int(i) for i in self.ids)

"""Standalone one-dimensional k-vector: one sorted array, one line, one k array."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .build import LineParams, build_kvector_array, build_mapping_line, build_structure
from .core import Dataset, NDKVError
from .search import TRIM_THRESHOLD, _FORCE, _MODE_NAME


@dataclass(frozen=True)
class KV1D:
    sorted_values: np.ndarray
    perm: np.ndarray
    line: LineParams
    k: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_values.size

    @property
    def n_k(self) -> int:
        return self.k.size

    @property
    def expected_per_cell(self) -> float:
        return self.n / self.n_k


@dataclass(frozen=True)
class KV1DHit:
    """Sorted-position range ``[lo, hi)`` plus how it was found."""

    lo: int
    hi: int
    window: tuple[int, int]
    steps: int
    modes: tuple[str, str]

    def __len__(self) -> int:
        return self.hi - self.lo

    def indexes(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)


def kv1d_build(values, n_k: int) -> KV1D:
    ds = Dataset(np.asarray(values, dtype=np.float64).reshape(-1, 1))
    sdb = build_structure(ds, 1)
    col = np.ascontiguousarray(sdb.points[:, 0])
    line = build_mapping_line(float(col[0]), float(col[-1]), n_k)
    k = build_kvector_array(col, line, n_k, 0)
    col.setflags(write=False)
    k.setflags(write=False)
    return KV1D(col, sdb.perm, line, k)


def kv1d_trim_mode_select(
    boundary_window_count: int, expected: float, threshold: float = TRIM_THRESHOLD
) -> str:
    if boundary_window_count < 0 or expected < 0:
        raise NDKVError("counts must be non-negative")
    return _MODE_NAME[_kernels.trim_mode(boundary_window_count, expected, threshold)]


def kv1d_search(
    kv: KV1D, a: float, b: float, mode: str = "auto", threshold: float = TRIM_THRESHOLD
) -> KV1DHit:
    """Positions of ``kv.sorted_values`` lying in ``[a, b]``.

    ``mode`` is ``"auto"`` (per-boundary choice), ``"linear"`` or ``"binary"``.
    """
    if a > b:
        raise NDKVError(f"inverted interval [{a}, {b}]")
    A, B, empty = _kernels.map_range(
        kv.line.m, kv.line.q, kv.line.constant, float(kv.sorted_values[0]), kv.n_k, a, b
    )
    if empty:
        pos = int(kv.k[-1]) if A == kv.n_k - 1 else 0
        return KV1DHit(pos, pos, (pos, pos), 0, ("linear", "linear"))
    pts = kv.sorted_values.reshape(-1, 1)
    lo, hi, steps, m_lo, m_hi = _kernels.trim_window(
        pts, np.empty((0, 0), dtype=np.int64), 0, kv.k, A, B, a, b,
        kv.expected_per_cell, threshold, _FORCE[mode],
    )
    return KV1DHit(
        int(lo), int(hi), (int(kv.k[A]), int(kv.k[B])), int(steps),
        (_MODE_NAME[m_lo], _MODE_NAME[m_hi]),
    )

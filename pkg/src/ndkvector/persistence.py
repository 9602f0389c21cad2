"""CSV ingestion and the binary structure file.

Binary layout (little-endian)::

    b"NDKV" | version u32 | flags u32 | n u64 | d u64 | n_db u64 | n_k u64
    perm            n            x u64
    points          n*d          x f64   structured order, row-major
    index arrays    (d-1)*n      x u64   if flags bit0; dimension-major
    line params     n_db*kd*2    x f64   if flags bit1; (m, q) per (sub-db, dim)
    k arrays        n_db*kd*n_k  x u64   if flags bit1
    sub-db minima   n_db         x f64

``kd`` is ``d`` when the index arrays are present and 1 otherwise.
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .build import IndexArray, PreprocessedDatabase, StructuredDatabase, partition_counts
from .core import Dataset, NDKVError

MAGIC = b"NDKV"
VERSION = 1
FLAG_INDEX = 1
FLAG_KVECTOR = 2
_HEADER = struct.Struct("<4sII4Q")


class FormatError(NDKVError):
    pass


class CSVFormatError(NDKVError):
    pass


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: str | os.PathLike) -> Dataset:
    """Read a comma-separated numeric table; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(c.strip() for c in r)]
    if not rows:
        raise CSVFormatError(f"{path}: empty file")
    if not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise CSVFormatError(f"{path}: header but no data rows")
    width = len(rows[0][1])
    data = np.empty((len(rows), width), dtype=np.float64)
    for r, (line, fields) in enumerate(rows):
        if len(fields) != width:
            raise CSVFormatError(f"{path}:{line}: expected {width} fields, got {len(fields)}")
        for c, text in enumerate(fields):
            try:
                data[r, c] = float(text)
            except ValueError:
                raise CSVFormatError(f"{path}:{line}: non-numeric field {text.strip()!r}") from None
    return Dataset(data)


def write_csv(ds: Dataset, path: str | os.PathLike, header: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        # repr round-trips float64 exactly
        for row in ds.points.tolist():
            w.writerow([repr(v) for v in row])


def to_bytes(pre: PreprocessedDatabase) -> bytes:
    sdb = pre.structure
    flags = (FLAG_INDEX if pre.has_index else 0) | (FLAG_KVECTOR if pre.has_kvector else 0)
    parts = [
        _HEADER.pack(MAGIC, VERSION, flags, sdb.n, sdb.d, sdb.n_db, pre.n_k),
        np.ascontiguousarray(sdb.perm, dtype="<u8").tobytes(),
        np.ascontiguousarray(sdb.points, dtype="<f8").tobytes(),
    ]
    if pre.has_index:
        parts.append(np.ascontiguousarray(pre.index.maps, dtype="<u8").tobytes())
    if pre.has_kvector:
        parts.append(np.ascontiguousarray(pre.lines, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(pre.kvec, dtype="<u8").tobytes())
    parts.append(np.ascontiguousarray(pre.submin, dtype="<f8").tobytes())
    return b"".join(parts)


def from_bytes(buf: bytes) -> PreprocessedDatabase:
    if len(buf) < _HEADER.size:
        raise FormatError("truncated header")
    magic, version, flags, n, d, n_db, n_k = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    if flags & ~(FLAG_INDEX | FLAG_KVECTOR):
        raise FormatError(f"unknown flag bits 0x{flags:x}")
    if n < 1 or d < 1 or not 1 <= n_db <= n or n_k < 2:
        raise FormatError(f"inconsistent sizes n={n} d={d} n_db={n_db} n_k={n_k}")
    has_index = bool(flags & FLAG_INDEX)
    has_kv = bool(flags & FLAG_KVECTOR)
    kd = d if has_index else 1

    layout = [("perm", "<u8", (n,)), ("points", "<f8", (n, d))]
    if has_index:
        layout.append(("index", "<u8", (d - 1, n)))
    if has_kv:
        layout.append(("lines", "<f8", (n_db, kd, 2)))
        layout.append(("kvec", "<u8", (n_db, kd, n_k)))
    layout.append(("submin", "<f8", (n_db,)))
    expected = _HEADER.size + sum(8 * int(np.prod(shape)) for _, _, shape in layout)
    if len(buf) < expected:
        raise FormatError(f"truncated payload: {len(buf)} bytes, expected {expected}")
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes do not match the flags and sizes")

    fields = {}
    off = _HEADER.size
    for name, dtype, shape in layout:
        count = int(np.prod(shape))
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=off).reshape(shape)
        fields[name] = arr.astype(np.int64 if dtype == "<u8" else np.float64)
        off += 8 * count

    perm = fields["perm"]
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise FormatError("perm is not a permutation of 0..n-1")
    first, n_p = partition_counts(n, n_db)
    points = np.ascontiguousarray(fields["points"])
    points.setflags(write=False)
    perm.setflags(write=False)
    sdb = StructuredDatabase(points, perm, n_db, n_p, first)
    index = None
    if has_index:
        maps = fields["index"]
        maps.setflags(write=False)
        index = IndexArray(maps)
    return PreprocessedDatabase(
        sdb,
        n_k,
        index,
        fields.get("lines"),
        fields.get("kvec"),
        fields["submin"],
    )


def save_structure(pre: PreprocessedDatabase, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(pre))


def load_structure(path: str | os.PathLike) -> PreprocessedDatabase:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def to_dataset(pre: PreprocessedDatabase) -> Dataset:
    """Original-order dataset recovered through the inverse permutation."""
    out = np.empty_like(pre.points)
    out[pre.perm] = pre.points
    return Dataset(out)

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import golden
from oracles import field_differences
from ndkvector import Dataset, preprocess, search_variant
from ndkvector.persistence import (
    _HEADER,
    FLAG_INDEX,
    FLAG_KVECTOR,
    CSVFormatError,
    FormatError,
    from_bytes,
    load_csv,
    load_structure,
    save_structure,
    to_bytes,
    to_dataset,
    write_csv,
)

VARIANT_FLAGS = [{}, {"index": False}, {"kvector": False}, {"index": False, "kvector": False}]


class TestCsv:
    def test_worked_table(self, tmp_path, worked_points):
        path = tmp_path / "t.csv"
        path.write_text("x,y,z\n" + "\n".join(",".join(str(int(v)) for v in row) for row in worked_points) + "\n")
        ds = load_csv(path)
        assert (ds.n, ds.d) == (10, 3)
        assert np.array_equal(ds.points, worked_points)

    def test_single_value(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("1.5\n")
        ds = load_csv(path)
        assert (ds.n, ds.d) == (1, 1)
        assert ds.points[0, 0] == 1.5

    def test_non_numeric_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,abc\n")
        with pytest.raises(CSVFormatError, match=r":2: non-numeric field 'abc'"):
            load_csv(path)

    def test_ragged(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(CSVFormatError, match=r":3: expected 2 fields"):
            load_csv(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(CSVFormatError, match="empty"):
            load_csv(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("x,y\n")
        with pytest.raises(CSVFormatError):
            load_csv(path)

    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = Dataset(rng.standard_normal((50, 4)) * 1e-7)
        path = tmp_path / "r.csv"
        write_csv(ds, path, header=["a", "b", "c", "d"])
        assert load_csv(path).points.tobytes() == ds.points.tobytes()


class TestBinary:
    def test_worked_round_trip(self, tmp_path, worked_pre, worked_query):
        path = tmp_path / "w.ndkv"
        save_structure(worked_pre, path)
        back = load_structure(path)
        assert field_differences(worked_pre, back) == []
        assert back.index.maps[0].tolist() == golden.INDEX_Y[0] + golden.INDEX_Y[1]
        for s in range(2):
            for j in range(3):
                assert back.kvector(s, j).tolist() == golden.KVEC[s][j]
        assert search_variant(back, worked_query).id_set() == golden.ANSWER
        assert to_bytes(back) == to_bytes(worked_pre)

    def test_header_layout(self, worked_pre):
        magic, version, flags, n, d, n_db, n_k = _HEADER.unpack_from(to_bytes(worked_pre))
        assert (magic, version, flags) == (b"NDKV", 1, FLAG_INDEX | FLAG_KVECTOR)
        assert (n, d, n_db, n_k) == (10, 3, 2, 5)

    def test_no_index_clears_bit0(self, worked_ds):
        pre = preprocess(worked_ds, 2, 5, index=False)
        buf = to_bytes(pre)
        flags = _HEADER.unpack_from(buf)[2]
        assert flags == FLAG_KVECTOR
        back = from_bytes(buf)
        assert back.variant == "noindex"
        assert back.index is None
        assert field_differences(pre, back) == []

    def test_bad_magic(self, worked_pre):
        buf = b"XXXX" + to_bytes(worked_pre)[4:]
        with pytest.raises(FormatError, match="magic"):
            from_bytes(buf)

    def test_version_mismatch(self, worked_pre):
        buf = bytearray(to_bytes(worked_pre))
        struct.pack_into("<I", buf, 4, 2)
        with pytest.raises(FormatError, match="version"):
            from_bytes(bytes(buf))

    @pytest.mark.parametrize("cut", [3, 30, 100])
    def test_truncated(self, worked_pre, cut):
        with pytest.raises(FormatError, match="truncated"):
            from_bytes(to_bytes(worked_pre)[:cut])

    def test_flags_inconsistent_with_payload(self, worked_pre):
        buf = bytearray(to_bytes(worked_pre))
        struct.pack_into("<I", buf, 8, FLAG_KVECTOR)
        with pytest.raises(FormatError):
            from_bytes(bytes(buf))

    def test_unknown_flag_bits(self, worked_pre):
        buf = bytearray(to_bytes(worked_pre))
        struct.pack_into("<I", buf, 8, 8 | FLAG_INDEX | FLAG_KVECTOR)
        with pytest.raises(FormatError, match="flag"):
            from_bytes(bytes(buf))

    def test_bad_permutation(self, worked_pre):
        buf = bytearray(to_bytes(worked_pre))
        struct.pack_into("<Q", buf, _HEADER.size, 1)
        with pytest.raises(FormatError, match="permutation"):
            from_bytes(bytes(buf))

    def test_to_dataset(self, worked_pre, worked_points):
        assert np.array_equal(to_dataset(worked_pre).points, worked_points)


@settings(max_examples=80, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        st.tuples(st.integers(1, 40), st.integers(1, 4)),
        elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=True),
    ),
    st.sampled_from(VARIANT_FLAGS),
    st.data(),
)
def test_round_trip_property(pts, flags, data):
    n = pts.shape[0]
    pre = preprocess(Dataset(pts), data.draw(st.integers(1, n)), data.draw(st.integers(2, 9)), **flags)
    back = from_bytes(to_bytes(pre))
    assert field_differences(pre, back) == []

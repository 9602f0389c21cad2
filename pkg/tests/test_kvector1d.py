import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import kvector_matches_oracle
from ndkvector import NDKVError, kv1d_build, kv1d_search, kv1d_trim_mode_select

TEN = [9, 3, 2, 7, 1, 0, 6, 8, 4, 5]


class TestBuild:
    def test_ten_values(self):
        kv = kv1d_build(TEN, 10)
        assert kv.sorted_values.tolist() == list(range(10))
        assert kv.perm.tolist() == [5, 4, 2, 1, 8, 9, 6, 3, 7, 0]
        assert round(kv.line.m, 2) == 1.0
        assert round(kv.line.q, 2) == 0.0
        assert kvector_matches_oracle(kv.k, kv.sorted_values, kv.line.m, kv.line.q) == []

    def test_ten_values_strict_less_counts(self):
        # the guard tilts the line so that z(i) < i below the midpoint and
        # z(i) > i above it; strict-less counting then steps past i at i = 5
        kv = kv1d_build(TEN, 10)
        assert kv.k.tolist() == [0, 1, 2, 3, 4, 6, 7, 8, 9, 10]

    def test_single_value(self):
        assert kv1d_build([4.0], 2).k.tolist() == [0, 1]

    def test_constant_values(self):
        kv = kv1d_build([5.0, 5.0, 5.0], 4)
        assert kv.line.constant
        assert kv.k.tolist() == [0, 0, 0, 3]

    def test_arrays_are_read_only(self):
        kv = kv1d_build(TEN, 10)
        with pytest.raises(ValueError):
            kv.k[0] = 3

    def test_rejects_non_finite(self):
        with pytest.raises(NDKVError):
            kv1d_build([1.0, float("nan")], 4)


class TestSearch:
    @pytest.fixture
    def kv(self):
        return kv1d_build(TEN, 10)

    def test_interior_query(self, kv):
        hit = kv1d_search(kv, 2.5, 5.5)
        assert hit.indexes().tolist() == [3, 4, 5]
        assert sorted(kv.perm[hit.indexes()].tolist()) == [1, 8, 9]

    def test_below_all_data(self, kv):
        assert len(kv1d_search(kv, -5, -1)) == 0

    def test_above_all_data(self, kv):
        assert len(kv1d_search(kv, 10.5, 20)) == 0

    def test_full_range(self, kv):
        hit = kv1d_search(kv, 0, 9)
        assert (hit.lo, hit.hi) == (0, 10)

    def test_boundary_coincident(self, kv):
        assert kv1d_search(kv, 3, 3).indexes().tolist() == [3]

    def test_inverted(self, kv):
        with pytest.raises(NDKVError):
            kv1d_search(kv, 2, 1)

    @pytest.mark.parametrize("mode", ["linear", "binary"])
    def test_forced_modes(self, kv, mode):
        hit = kv1d_search(kv, 2.5, 5.5, mode=mode)
        assert hit.modes == (mode, mode)
        assert hit.indexes().tolist() == [3, 4, 5]

    def test_window_contains_result(self, kv):
        hit = kv1d_search(kv, 2.5, 5.5)
        assert hit.window[0] <= hit.lo <= hit.hi <= hit.window[1]


class TestTrimModeSelect:
    @pytest.mark.parametrize(
        "window, expected, mode", [(12, 10, "linear"), (5000, 10, "binary"), (0, 10, "linear"), (100, 10, "linear"), (101, 10, "binary")]
    )
    def test_examples(self, window, expected, mode):
        assert kv1d_trim_mode_select(window, expected) == mode

    def test_custom_threshold(self):
        assert kv1d_trim_mode_select(30, 10, threshold=2) == "binary"

    def test_rejects_negative(self):
        with pytest.raises(NDKVError):
            kv1d_trim_mode_select(-1, 10)


@settings(max_examples=300, deadline=None)
@given(
    hnp.arrays(np.float64, st.integers(1, 120), elements=st.integers(-30, 30).map(float)),
    st.integers(2, 50),
    st.data(),
)
def test_search_equals_scan(values, n_k, data):
    kv = kv1d_build(values, n_k)
    pool = st.one_of(st.sampled_from(values.tolist()), st.floats(-40, 40))
    a, b = sorted([data.draw(pool), data.draw(pool)])
    mode = data.draw(st.sampled_from(["auto", "linear", "binary"]))
    hit = kv1d_search(kv, a, b, mode=mode)
    want = np.flatnonzero((kv.sorted_values >= a) & (kv.sorted_values <= b))
    assert hit.indexes().tolist() == want.tolist()
    assert sorted(kv.perm[hit.indexes()].tolist()) == np.flatnonzero((values >= a) & (values <= b)).tolist()


def test_adversarial_cluster_uses_binary_trimming():
    n = 20_000
    values = np.full(n, 0.5) + np.linspace(0, 1e-9, n)
    values[-1] = 1000.0
    kv = kv1d_build(values, 2000)
    a, b = float(values[n // 3]), float(values[2 * n // 3])
    auto = kv1d_search(kv, a, b)
    linear = kv1d_search(kv, a, b, mode="linear")
    assert auto.modes == ("binary", "binary")
    assert (auto.lo, auto.hi) == (linear.lo, linear.hi) == (n // 3, 2 * n // 3 + 1)
    assert auto.steps <= 2 * math.ceil(math.log2(n)) + 4
    assert linear.steps >= n // 3

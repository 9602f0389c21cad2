import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from oracles import oracle_ids
from ndkvector import Dataset, DimensionMismatchError, RangeQuery, brute_force_search, kdtree_build, kdtree_search
from test_search import box_for, tables


class TestBruteForce:
    def test_worked_example(self, worked_ds, worked_query):
        res = brute_force_search(worked_ds, worked_query)
        assert res.id_set() == golden.ANSWER
        assert res.examined == worked_ds.n

    def test_box_below_data(self, worked_ds):
        assert len(brute_force_search(worked_ds, RangeQuery([-3, -3, -3], [-1, -1, -1]))) == 0

    def test_hull(self, worked_ds):
        q = RangeQuery(worked_ds.points.min(axis=0), worked_ds.points.max(axis=0))
        assert brute_force_search(worked_ds, q).sorted_ids().tolist() == list(range(10))

    def test_validates(self, worked_ds):
        with pytest.raises(DimensionMismatchError):
            brute_force_search(worked_ds, RangeQuery([0], [1]))


class TestKdTree:
    def test_worked_example(self, worked_ds, worked_query):
        tree = kdtree_build(worked_ds)
        assert kdtree_search(tree, worked_query).id_set() == golden.ANSWER

    def test_single_point(self):
        tree = kdtree_build(Dataset([[1.0, 2.0]]))
        assert tree.n_nodes == 1
        assert kdtree_search(tree, RangeQuery([0, 0], [5, 5])).sorted_ids().tolist() == [0]
        assert len(kdtree_search(tree, RangeQuery([3, 0], [5, 5]))) == 0

    def test_node_ranges_partition_points(self, uniform_3d):
        tree = kdtree_build(uniform_3d, leaf_size=4)
        assert sorted(tree.idx.tolist()) == list(range(uniform_3d.n))
        leaves = (tree.left < 0)
        sizes = tree.node_hi[leaves] - tree.node_lo[leaves]
        assert sizes.sum() == uniform_3d.n
        assert sizes.max() <= 4

    def test_deterministic_with_duplicates(self):
        pts = np.repeat(np.arange(5.0), 40).reshape(-1, 1)
        a = kdtree_build(Dataset(pts))
        b = kdtree_build(Dataset(pts))
        assert np.array_equal(a.idx, b.idx)
        assert np.array_equal(a.split_val, b.split_val)

    def test_random_queries(self, uniform_3d):
        tree = kdtree_build(uniform_3d)
        rng = np.random.default_rng(8)
        for _ in range(100):
            c, h = rng.random(3), rng.uniform(0.01, 0.4, 3)
            q = RangeQuery(c - h, c + h)
            got = kdtree_search(tree, q).sorted_ids().tolist()
            assert got == brute_force_search(uniform_3d, q).sorted_ids().tolist()

    def test_rejects_bad_leaf_size(self, worked_ds):
        with pytest.raises(ValueError):
            kdtree_build(worked_ds, leaf_size=0)


@settings(max_examples=200, deadline=None)
@given(tables, st.integers(1, 6), st.data())
def test_baselines_equal_oracle(pts, leaf, data):
    q = data.draw(box_for(pts))
    ds = Dataset(pts)
    want = oracle_ids(pts, q.lo, q.hi).tolist()
    assert brute_force_search(ds, q).sorted_ids().tolist() == want
    assert kdtree_search(kdtree_build(ds, leaf), q).sorted_ids().tolist() == want

import numpy as np
import pytest

import golden
from ndkvector import Dataset, RangeQuery, preprocess


@pytest.fixture(scope="session")
def worked_points() -> np.ndarray:
    return np.column_stack([golden.X, golden.Y, golden.Z]).astype(np.float64)


@pytest.fixture(scope="session")
def worked_ds(worked_points) -> Dataset:
    return Dataset(worked_points)


@pytest.fixture(scope="session")
def worked_pre(worked_ds):
    return preprocess(worked_ds, n_db=golden.N_DB, n_k=golden.N_K)


@pytest.fixture(scope="session")
def worked_query() -> RangeQuery:
    return RangeQuery.from_bounds(golden.QUERY)


@pytest.fixture(scope="session")
def uniform_3d() -> Dataset:
    rng = np.random.default_rng(1234)
    return Dataset(rng.random((4000, 3)))

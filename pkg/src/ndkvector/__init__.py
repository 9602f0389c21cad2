"""Static orthogonal range search with the n-dimensional k-vector."""

from .baselines import KdTree, brute_force_search, kdtree_build, kdtree_search
from .build import (
    IndexArray,
    LineParams,
    PreprocessedDatabase,
    StructuredDatabase,
    build_index_arrays,
    build_kvector_array,
    build_mapping_line,
    build_structure,
    partition_counts,
    preprocess,
)
from .core import (
    Dataset,
    DimensionMismatchError,
    InvertedIntervalError,
    NDKVError,
    NonFiniteError,
    QueryResult,
    RangeQuery,
    validate_query,
)
from .kvector1d import KV1D, kv1d_build, kv1d_search, kv1d_trim_mode_select
from .search import (
    DimCounts,
    WindowBounds,
    estimate_counts,
    map_range,
    search,
    search_subdatabase,
    select_projection_dimension,
    trim_extremes,
)
from .variants import search_no_index, search_no_kvector, search_variant

__all__ = [
    "Dataset", "RangeQuery", "QueryResult", "validate_query", "NDKVError",
    "DimensionMismatchError", "InvertedIntervalError", "NonFiniteError",
    "StructuredDatabase", "IndexArray", "LineParams", "PreprocessedDatabase",
    "partition_counts", "build_structure", "build_index_arrays", "build_mapping_line",
    "build_kvector_array", "preprocess",
    "KV1D", "kv1d_build", "kv1d_search", "kv1d_trim_mode_select",
    "WindowBounds", "DimCounts", "map_range", "estimate_counts",
    "select_projection_dimension", "trim_extremes", "search_subdatabase", "search",
    "search_no_index", "search_no_kvector", "search_variant",
    "brute_force_search", "KdTree", "kdtree_build", "kdtree_search",
]

"""Semantic caching for skyline queries."""

from .cache import Answer, Mode, SkylineCache, classify
from .core import (
    Preference,
    Relation,
    SchemaError,
    Tuple,
    as_query,
    brute_force_skyline,
    dominates,
    validate_distinct_values,
)
from .data import GenSpec, WorkloadSpec, generate, load_csv, make_workload, read_workload
from .engine import RunMetrics, sfs_skyline, sort_key
from .index import CacheIndex, QueryClass, QueryKind, Segment, replacement_value

__version__ = "0.1.0"

__all__ = [
    "Answer", "CacheIndex", "GenSpec", "Mode", "Preference", "QueryClass", "QueryKind",
    "Relation", "RunMetrics", "SchemaError", "Segment", "SkylineCache", "Tuple",
    "WorkloadSpec", "as_query", "brute_force_skyline", "classify", "dominates", "generate",
    "load_csv", "make_workload", "read_workload", "replacement_value", "sfs_skyline",
    "sort_key", "validate_distinct_values",
]

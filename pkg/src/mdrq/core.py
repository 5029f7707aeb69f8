"""Core domain types and the object-vs-query match kernels.

Everything downstream (scans, trees, grid files) works on these types:
an immutable float32 point collection, an inclusive per-dimension interval
query with infinity sentinels for unqueried dimensions, and sorted id
result sets.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels

LANE_WIDTH = 8  # 32-bit lanes per block in the vectorized kernel

_HEADER = struct.Struct("<4sIQI")
_MAGIC = b"MDRQ"
_FORMAT_VERSION = 1

NEG_INF = np.float32(-np.inf)
POS_INF = np.float32(np.inf)


class KernelMode(enum.Enum):
    """How a row is compared against the query bounds."""

    SCALAR = "scalar"
    VECTORIZED = "vector"

    @property
    def code(self) -> int:
        return kernels.MODE_SCALAR if self is KernelMode.SCALAR else kernels.MODE_BLOCKED

    @classmethod
    def parse(cls, name: str) -> "KernelMode":
        for mode in cls:
            if name in (mode.value, mode.name.lower()):
                return mode
        raise ValueError(f"unknown kernel mode {name!r} (use 'scalar' or 'vector')")


def _as_matrix(values, m: int | None = None) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d value matrix, got shape {arr.shape}")
    if m is not None and arr.shape[1] != m:
        raise ValueError(f"expected {m} dimensions, got {arr.shape[1]}")
    return arr


class DataSet:
    """Immutable n x m collection of float32 data objects, row-major."""

    __slots__ = ("values", "per_dim_bounds")

    def __init__(self, values: np.ndarray, per_dim_bounds: np.ndarray | None = None):
        values = _as_matrix(values)
        if values.shape[1] < 1:
            raise ValueError("dimensionality must be at least 1")
        if np.isnan(values).any():
            raise ValueError("NaN values are rejected at ingestion")
        if per_dim_bounds is None:
            per_dim_bounds = _observed_bounds(values)
        else:
            per_dim_bounds = np.ascontiguousarray(per_dim_bounds, dtype=np.float32)
            if per_dim_bounds.shape != (values.shape[1], 2):
                raise ValueError("per_dim_bounds must have shape (m, 2)")
        values.setflags(write=False)
        per_dim_bounds.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "per_dim_bounds", per_dim_bounds)

    def __setattr__(self, name, value):
        raise AttributeError("DataSet is immutable")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def column(self, j: int) -> np.ndarray:
        return np.ascontiguousarray(self.values[:, j])

    def __repr__(self) -> str:
        return f"DataSet(n={self.n}, m={self.m})"


def _observed_bounds(values: np.ndarray) -> np.ndarray:
    m = values.shape[1]
    bounds = np.zeros((m, 2), dtype=np.float32)
    if values.shape[0] > 0:
        bounds[:, 0] = values.min(axis=0)
        bounds[:, 1] = values.max(axis=0)
    return bounds


class RangeQuery:
    """Per-dimension inclusive [lb, ub] predicates.

    Unqueried dimensions carry the sentinel pair (-inf, +inf); a partial-match
    query is just a complete-match query with sentinels, so every access
    method handles both through the same path.
    """

    __slots__ = ("lower", "upper", "queried")

    def __init__(self, lower, upper):
        lower = np.ascontiguousarray(lower, dtype=np.float32)
        upper = np.ascontiguousarray(upper, dtype=np.float32)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d and of equal length")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("NaN query bounds are not allowed")
        queried = ~((lower == NEG_INF) & (upper == POS_INF))
        bad = queried & (lower > upper)
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"lower bound exceeds upper bound in dimension {j}: "
                f"{lower[j]} > {upper[j]}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        queried.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "queried", queried)

    def __setattr__(self, name, value):
        raise AttributeError("RangeQuery is immutable")

    @property
    def m(self) -> int:
        return self.lower.shape[0]

    @property
    def queried_dims(self) -> np.ndarray:
        return np.flatnonzero(self.queried)

    @classmethod
    def full_domain(cls, m: int) -> "RangeQuery":
        return cls(np.full(m, NEG_INF), np.full(m, POS_INF))

    @classmethod
    def from_predicates(cls, m: int, predicates: dict[int, tuple[float, float]]) -> "RangeQuery":
        """Build a partial-match query from a {dimension: (lb, ub)} mapping."""
        lower = np.full(m, NEG_INF, dtype=np.float32)
        upper = np.full(m, POS_INF, dtype=np.float32)
        for j, (lb, ub) in predicates.items():
            if not 0 <= j < m:
                raise ValueError(f"predicate dimension {j} out of range for m={m}")
            lower[j] = lb
            upper[j] = ub
        return cls(lower, upper)

    def __repr__(self) -> str:
        parts = [
            f"{j}:[{self.lower[j]:g},{self.upper[j]:g}]"
            for j in self.queried_dims[:4]
        ]
        if len(self.queried_dims) > 4:
            parts.append("...")
        return f"RangeQuery(m={self.m}, {' '.join(parts) or 'full domain'})"


@dataclass(frozen=True)
class ResultSet:
    """Ascending, duplicate-free 0-based object identifiers."""

    ids: np.ndarray

    @classmethod
    def from_ids(cls, ids) -> "ResultSet":
        arr = np.ascontiguousarray(ids, dtype=np.int64)
        return cls(arr)

    def validate(self, n: int) -> None:
        ids = self.ids
        if ids.size and (ids[0] < 0 or ids[-1] >= n):
            raise ValueError("result ids out of range")
        if ids.size > 1 and not (np.diff(ids) > 0).all():
            raise ValueError("result ids not strictly ascending")

    def __len__(self) -> int:
        return int(self.ids.size)

    def __eq__(self, other) -> bool:
        if isinstance(other, ResultSet):
            return np.array_equal(self.ids, other.ids)
        return NotImplemented

    def __hash__(self):
        return hash(self.ids.tobytes())

    def __repr__(self) -> str:
        return f"ResultSet({len(self)} ids)"


@dataclass(frozen=True)
class SelectivityStats:
    """Joint and per-dimension match fractions of a query against a dataset."""

    joint: float
    per_dim: np.ndarray


@dataclass
class SearchStats:
    """Instrumentation counters accumulated during one search.

    Returned per call, never stored on the access method, so concurrent
    searches stay safe.
    """

    objects_compared: int = 0
    nodes_visited: int = 0
    columns_scanned: int = 0
    early_breaks: int = 0
    and_chunks: int = 0

    def merge(self, other: "SearchStats") -> None:
        self.objects_compared += other.objects_compared
        self.nodes_visited += other.nodes_visited
        self.columns_scanned += other.columns_scanned
        self.early_breaks += other.early_breaks
        self.and_chunks += other.and_chunks


def _check_dims(obj_m: int, query: RangeQuery) -> None:
    if obj_m != query.m:
        raise ValueError(f"dimension mismatch: object has {obj_m}, query has {query.m}")


def _as_row(obj) -> np.ndarray:
    row = np.ascontiguousarray(obj, dtype=np.float32)
    if row.ndim != 1:
        raise ValueError("object must be a 1-d row")
    return row


def match_scalar(obj, query: RangeQuery) -> bool:
    """Dimension-by-dimension comparison with an early break on first failure."""
    row = _as_row(obj)
    _check_dims(row.shape[0], query)
    return kernels.match_row(row, query.lower, query.upper, kernels.MODE_SCALAR)


def match_vectorized(obj, query: RangeQuery) -> bool:
    """Lane-blocked comparison: blocks of 8 dimensions, mask AND, scalar tail.

    Semantically identical to match_scalar on every input.
    """
    row = _as_row(obj)
    _check_dims(row.shape[0], query)
    return kernels.match_row(row, query.lower, query.upper, kernels.MODE_BLOCKED)


def match(obj, query: RangeQuery, mode: KernelMode = KernelMode.SCALAR) -> bool:
    row = _as_row(obj)
    _check_dims(row.shape[0], query)
    return kernels.match_row(row, query.lower, query.upper, mode.code)


def selectivity_oracle(data: DataSet, query: RangeQuery) -> SelectivityStats:
    """Ground-truth joint and per-dimension selectivities by exhaustive count.

    Unqueried dimensions have per-dimension selectivity 1. An empty dataset
    has joint selectivity 0 by definition.
    """
    _check_dims(data.m, query)
    n = data.n
    per_dim = np.ones(data.m, dtype=np.float64)
    if n == 0:
        per_dim[query.queried] = 0.0
        return SelectivityStats(0.0, per_dim)
    for j in query.queried_dims:
        col = data.values[:, j]
        hits = np.count_nonzero((col >= query.lower[j]) & (col <= query.upper[j]))
        per_dim[j] = hits / n
    ids, _, _ = kernels.scan_rows(data.values, query.lower, query.upper, kernels.MODE_SCALAR)
    return SelectivityStats(ids.size / n, per_dim)


def write_dataset(data: DataSet, path) -> None:
    """Write the little-endian binary dataset format (magic 'MDRQ', v1)."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _FORMAT_VERSION, data.n, data.m))
        fh.write(np.ascontiguousarray(data.values, dtype="<f4").tobytes())


def read_dataset(path) -> DataSet:
    """Read and validate a binary dataset file."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, n, m = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        payload = fh.read()
    expected = n * m * 4
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for n={n} m={m}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(n, m)
    return DataSet(values)

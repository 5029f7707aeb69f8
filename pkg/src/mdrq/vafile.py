"""VA-file: a 2-bit-per-dimension grid approximation over the data space.

Every dimension is cut into four equal-width intervals spanning the observed
bounds, giving 4^m rectangular cells. Objects are hashed ("approximated") to
their cell code and stored in per-cell buckets. A query first narrows the
admissible interval-index range per dimension, then scans only the buckets
of candidate cells.

The cell directory is a sparse map rather than a dense 2^b array: at m = 19
a dense directory would need 2^38 slots, which is not a real option, and the
sparse map preserves the semantics at every dimensionality.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import DataSet, KernelMode, RangeQuery, ResultSet, SearchStats

BITS_PER_DIM = 2
INTERVALS = 1 << BITS_PER_DIM  # 4


class VaGrid:
    """Equal-width 4-interval grid per dimension over observed bounds."""

    __slots__ = ("mins", "maxs", "m")

    def __init__(self, per_dim_bounds: np.ndarray):
        bounds = np.asarray(per_dim_bounds, dtype=np.float64)
        if bounds.ndim != 2 or bounds.shape[1] != 2:
            raise ValueError("per_dim_bounds must have shape (m, 2)")
        self.mins = bounds[:, 0].copy()
        self.maxs = bounds[:, 1].copy()
        self.m = bounds.shape[0]

    def cell_index(self, value: float, dim: int) -> int:
        """Interval index of a value in one dimension, clamped into 0..3."""
        lo = self.mins[dim]
        hi = self.maxs[dim]
        if hi <= lo:
            return 0  # degenerate dimension
        idx = int(np.floor(INTERVALS * (float(value) - lo) / (hi - lo)))
        return min(INTERVALS - 1, max(0, idx))

    def approximate(self, obj) -> np.ndarray:
        """Per-dimension interval indices (uint8) of one object."""
        row = np.asarray(obj, dtype=np.float32)
        if row.shape != (self.m,):
            raise ValueError(f"object must have {self.m} dimensions")
        return np.array(
            [self.cell_index(row[j], j) for j in range(self.m)], dtype=np.uint8)

    def approximate_all(self, values: np.ndarray) -> np.ndarray:
        """Vectorized approximation; identical to approximate() row by row."""
        vals = np.asarray(values, dtype=np.float32).astype(np.float64)
        width = self.maxs - self.mins
        degenerate = width <= 0
        safe = np.where(degenerate, 1.0, width)
        idx = np.floor(INTERVALS * (vals - self.mins) / safe)
        idx = np.clip(idx, 0, INTERVALS - 1)
        idx[:, degenerate] = 0
        return idx.astype(np.uint8)


def pack_code(indices: np.ndarray) -> bytes:
    """Pack per-dimension interval indices (2 bits each) into bytes."""
    idx = np.asarray(indices, dtype=np.uint8)
    m = idx.shape[0]
    padded = np.zeros(-(-m // 4) * 4, dtype=np.uint8)
    padded[:m] = idx
    quads = padded.reshape(-1, 4)
    packed = quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6)
    return packed.tobytes()


def unpack_code(code: bytes, m: int) -> np.ndarray:
    packed = np.frombuffer(code, dtype=np.uint8)
    out = np.empty(packed.size * 4, dtype=np.uint8)
    out[0::4] = packed & 3
    out[1::4] = (packed >> 2) & 3
    out[2::4] = (packed >> 4) & 3
    out[3::4] = (packed >> 6) & 3
    return out[:m]


class VaFile:
    name = "vafile"

    def __init__(self, grid: VaGrid, *, mode: KernelMode = KernelMode.SCALAR):
        self.grid = grid
        self.mode = mode
        self._codes = np.empty((0, grid.m), dtype=np.uint8)  # occupied cells
        self._buckets: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}
        self._size = 0

    @property
    def size(self) -> int:
        return self._size

    @property
    def occupied_cells(self) -> int:
        return len(self._buckets)

    @classmethod
    def build(cls, objects, ids, seed: int = 0, *,
              per_dim_bounds: np.ndarray | None = None,
              mode: KernelMode = KernelMode.SCALAR) -> "VaFile":
        """Grid from observed bounds; every object appended to its cell bucket.

        The seed parameter exists for factory-signature uniformity; the build
        is deterministic regardless.
        """
        objects = np.ascontiguousarray(objects, dtype=np.float32)
        if objects.ndim != 2:
            raise ValueError("objects must be a 2-d matrix")
        n, m = objects.shape
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids must have one entry per object")
        if per_dim_bounds is None:
            bounds = np.zeros((m, 2), dtype=np.float64)
            if n:
                bounds[:, 0] = objects.min(axis=0)
                bounds[:, 1] = objects.max(axis=0)
        else:
            bounds = per_dim_bounds
        va = cls(VaGrid(bounds), mode=mode)
        if n == 0:
            return va
        idx = va.grid.approximate_all(objects)
        rows = np.ascontiguousarray(idx).view(np.dtype((np.void, m))).ravel()
        uniq, inverse = np.unique(rows, return_inverse=True)
        order = np.argsort(inverse, kind="stable")
        starts = np.searchsorted(inverse[order], np.arange(uniq.size))
        ends = np.append(starts[1:], n)
        codes = np.empty((uniq.size, m), dtype=np.uint8)
        for k in range(uniq.size):
            members = order[starts[k]:ends[k]]
            cell_idx = idx[members[0]]
            codes[k] = cell_idx
            va._buckets[pack_code(cell_idx)] = (
                ids[members].copy(), np.ascontiguousarray(objects[members]))
        va._codes = codes
        va._size = n
        return va

    @classmethod
    def from_dataset(cls, data: DataSet, *, mode: KernelMode = KernelMode.SCALAR) -> "VaFile":
        return cls.build(data.values, np.arange(data.n, dtype=np.int64),
                         per_dim_bounds=data.per_dim_bounds.astype(np.float64), mode=mode)

    def _candidate_ranges(self, query: RangeQuery) -> np.ndarray | None:
        """Admissible interval-index range per dimension, or None if empty."""
        ranges = np.empty((self.grid.m, 2), dtype=np.int64)
        for j in range(self.grid.m):
            lo = float(query.lower[j])
            hi = float(query.upper[j])
            if hi < self.grid.mins[j] or lo > self.grid.maxs[j]:
                return None  # interval entirely outside the data bounds
            ranges[j, 0] = self.grid.cell_index(max(lo, self.grid.mins[j]), j)
            ranges[j, 1] = self.grid.cell_index(min(hi, self.grid.maxs[j]), j)
        return ranges

    def candidate_codes(self, query: RangeQuery, *, force_path: str | None = None) -> list[bytes]:
        """Occupied candidate cell codes for a query.

        Enumerates the Cartesian product of admissible indices when it is
        smaller than the occupied-cell count, otherwise filters the occupied
        cells by index containment. Both paths return the same codes
        (ascending by packed code). force_path picks one for testing.
        """
        ranges = self._candidate_ranges(query)
        if ranges is None:
            return []
        spans = ranges[:, 1] - ranges[:, 0] + 1
        cartesian = float(np.prod(spans.astype(np.float64)))
        path = force_path or (
            "cartesian" if cartesian <= len(self._buckets) else "occupied")
        if path == "cartesian":
            if cartesian > 4_000_000:
                raise ValueError("cartesian enumeration forced on an oversized grid")
            grids = np.meshgrid(
                *[np.arange(ranges[j, 0], ranges[j, 1] + 1, dtype=np.uint8)
                  for j in range(self.grid.m)],
                indexing="ij")
            cells = np.stack([g.ravel() for g in grids], axis=1)
            out = [
                code for cell in cells
                if (code := pack_code(cell)) in self._buckets
            ]
        else:
            if self._codes.shape[0] == 0:
                return []
            hit = ((self._codes >= ranges[:, 0].astype(np.uint8))
                   & (self._codes <= ranges[:, 1].astype(np.uint8))).all(axis=1)
            out = [pack_code(self._codes[i]) for i in np.flatnonzero(hit)]
        return sorted(out)

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.grid.m:
            raise ValueError(f"query has {query.m} dimensions, grid has {self.grid.m}")
        stats = SearchStats()
        chunks = []
        for code in self.candidate_codes(query):
            bucket_ids, bucket_objs = self._buckets[code]
            stats.nodes_visited += 1  # buckets scanned
            local, compared, early = kernels.scan_rows(
                bucket_objs, query.lower, query.upper, self.mode.code)
            stats.objects_compared += compared
            stats.early_breaks += early
            if local.size:
                chunks.append(bucket_ids[local])
        merged = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
        return ResultSet(merged), stats

    def audit(self) -> dict:
        """Bucket consistency: stored code equals approximate(object) for all."""
        total = 0
        for code, (bucket_ids, bucket_objs) in self._buckets.items():
            if bucket_ids.size != bucket_objs.shape[0]:
                raise ValueError("bucket id/object length mismatch")
            if bucket_ids.size == 0:
                raise ValueError("empty bucket stored")
            total += bucket_ids.size
            recomputed = self.grid.approximate_all(bucket_objs)
            expected = unpack_code(code, self.grid.m)
            if not (recomputed == expected).all():
                raise ValueError(f"bucket {code!r} holds a misfiled object")
        if total != self._size:
            raise ValueError(f"bucket sizes sum to {total}, expected {self._size}")
        return {"cells": len(self._buckets), "entries": total}

    def occupancy(self) -> dict:
        """Histogram summary of occupied-cell bucket sizes."""
        sizes = np.array([ids.size for ids, _ in self._buckets.values()], dtype=np.int64)
        if sizes.size == 0:
            return {"cells": 0, "min": 0, "mean": 0.0, "max": 0}
        return {
            "cells": int(sizes.size),
            "min": int(sizes.min()),
            "mean": float(sizes.mean()),
            "max": int(sizes.max()),
        }

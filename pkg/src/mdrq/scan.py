"""Scan-based query executors.

Three variants: a single-threaded sequential scan, a parallel scan over
horizontally partitioned row blocks, and a parallel scan over vertically
partitioned (columnar) data that intersects per-dimension bitmasks.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import DataSet, KernelMode, RangeQuery, ResultSet, SearchStats
from .parallel import PartitionLayout, WorkerPool, default_threads


class ColumnSet:
    """Columnar mirror of a DataSet: m contiguous one-dimensional arrays."""

    __slots__ = ("columns", "n", "m")

    def __init__(self, columns):
        columns = [np.ascontiguousarray(c, dtype=np.float32) for c in columns]
        if not columns:
            raise ValueError("at least one column required")
        n = columns[0].shape[0]
        for c in columns:
            if c.ndim != 1 or c.shape[0] != n:
                raise ValueError("columns must be 1-d and of equal length")
            c.setflags(write=False)
        self.columns = columns
        self.n = n
        self.m = len(columns)

    @classmethod
    def from_dataset(cls, data: DataSet) -> "ColumnSet":
        return cls([data.values[:, j] for j in range(data.m)])

    def to_matrix(self) -> np.ndarray:
        return np.column_stack(self.columns)


def chunk_spans(nbytes: int, t: int) -> list[tuple[int, int]]:
    """Exactly t byte spans of near-equal size; the last takes the remainder."""
    if t < 1:
        raise ValueError("chunk count must be at least 1")
    size = -(-nbytes // t)  # ceil
    spans = []
    for i in range(t):
        start = min(i * size, nbytes)
        spans.append((start, min(start + size, nbytes)))
    return spans


def and_masks_chunked(masks, t: int, pool: WorkerPool | None = None) -> np.ndarray:
    """Bitwise-AND bitmasks in t chunks (concurrently when a pool is given)."""
    masks = list(masks)
    if not masks:
        raise ValueError("no masks to merge")
    nbytes = masks[0].shape[0]
    out = np.empty(nbytes, dtype=np.uint8)
    spans = chunk_spans(nbytes, t)

    def merge_span(span):
        start, end = span
        if start == end:
            return
        acc = out[start:end]
        acc[:] = masks[0][start:end]
        for mask in masks[1:]:
            np.bitwise_and(acc, mask[start:end], out=acc)

    if pool is not None:
        pool.run([(lambda s=s: merge_span(s)) for s in spans])
    else:
        for s in spans:
            merge_span(s)
    return out


def mask_popcount(mask: np.ndarray) -> int:
    return int(np.unpackbits(mask, bitorder="little").sum())


def mask_to_ids(mask: np.ndarray, n: int) -> np.ndarray:
    """Positions of set bits, ascending."""
    bits = np.unpackbits(mask, count=n, bitorder="little")
    return np.flatnonzero(bits).astype(np.int64)


class SequentialScan:
    """Single-threaded scan over the whole row-major dataset."""

    def __init__(self, data: DataSet, mode: KernelMode = KernelMode.SCALAR):
        self.data = data
        self.mode = mode
        self.name = "sequential"

    @property
    def size(self) -> int:
        return self.data.n

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.data.m:
            raise ValueError(f"query has {query.m} dimensions, data has {self.data.m}")
        ids, compared, early = kernels.scan_rows(
            self.data.values, query.lower, query.upper, self.mode.code)
        return ResultSet(ids), SearchStats(objects_compared=compared, early_breaks=early)

    def close(self) -> None:
        pass


class HorizontalScan:
    """Parallel scan over p row partitions, one worker task per partition."""

    def __init__(self, data: DataSet, layout: PartitionLayout, *,
                 mode: KernelMode = KernelMode.SCALAR, threads: int | None = None):
        if layout.n != data.n:
            raise ValueError(f"layout covers {layout.n} objects, dataset has {data.n}")
        self.m = data.m
        self.mode = mode
        self.layout = layout
        self.name = "horizontal"
        # independent contiguous row blocks, one per partition
        self._parts = [
            (np.ascontiguousarray(data.values[ids]), ids.copy())
            for ids in layout.parts
        ]
        self._pool = WorkerPool(threads if threads is not None else layout.p)

    @property
    def size(self) -> int:
        return sum(block.shape[0] for block, _ in self._parts)

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.m:
            raise ValueError(f"query has {query.m} dimensions, data has {self.m}")
        lower, upper, code = query.lower, query.upper, self.mode.code

        def scan_part(block, ids):
            local, compared, early = kernels.scan_rows(block, lower, upper, code)
            return ids[local], compared, early

        outcomes = self._pool.run(
            [(lambda b=b, i=i: scan_part(b, i)) for b, i in self._parts])
        stats = SearchStats()
        chunks = []
        for part_ids, compared, early in outcomes:
            if part_ids.size:
                chunks.append(part_ids)
            stats.objects_compared += compared
            stats.early_breaks += early
        merged = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
        return ResultSet(merged), stats

    def close(self) -> None:
        self._pool.close()


class VerticalScan:
    """Columnar scan: one bitmask per queried dimension, AND-merged in chunks.

    Unqueried dimensions are skipped entirely, which is where partial-match
    queries win. A query with no queried dimensions returns every id.
    """

    def __init__(self, source, *, threads: int | None = None,
                 mode: KernelMode = KernelMode.VECTORIZED):
        cols = source if isinstance(source, ColumnSet) else ColumnSet.from_dataset(source)
        self.cols = cols
        self.mode = mode
        self.t = threads if threads is not None else default_threads()
        self.name = "vertical"
        self._pool = WorkerPool(self.t)

    @property
    def size(self) -> int:
        return self.cols.n

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.cols.m:
            raise ValueError(f"query has {query.m} dimensions, data has {self.cols.m}")
        n = self.cols.n
        dims = query.queried_dims
        if dims.size == 0:
            return ResultSet(np.arange(n, dtype=np.int64)), SearchStats()
        code = self.mode.code

        def scan_dim(j):
            return kernels.scan_column(
                self.cols.columns[j], query.lower[j], query.upper[j], code)

        masks = self._pool.run([(lambda j=int(j): scan_dim(j)) for j in dims])
        merged = and_masks_chunked(masks, self.t, self._pool)
        ids = mask_to_ids(merged, n)
        stats = SearchStats(
            objects_compared=int(dims.size) * n,
            columns_scanned=int(dims.size),
            and_chunks=self.t,
        )
        return ResultSet(ids), stats

    def close(self) -> None:
        self._pool.close()


def sequential_scan(data: DataSet, query: RangeQuery,
                    kernel: KernelMode = KernelMode.SCALAR) -> ResultSet:
    """One-shot sequential scan; the ground-truth oracle for every method."""
    return SequentialScan(data, kernel).search(query)


def horizontal_scan(data: DataSet, layout: PartitionLayout, query: RangeQuery,
                    kernel: KernelMode = KernelMode.SCALAR,
                    threads: int | None = None) -> ResultSet:
    scanner = HorizontalScan(data, layout, mode=kernel, threads=threads)
    try:
        return scanner.search(query)
    finally:
        scanner.close()


def vertical_scan(cols: ColumnSet | DataSet, query: RangeQuery, workers: int) -> ResultSet:
    scanner = VerticalScan(cols, threads=workers)
    try:
        return scanner.search(query)
    finally:
        scanner.close()

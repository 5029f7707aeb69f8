"""Horizontal partitioning and fan-out/fan-in execution.

A layout assigns objects to p partitions at random (balanced to within one
object). Scans and index structures alike build one independent instance per
partition; a query is fanned out to one task per instance and the partial
results, which carry original object ids, are concatenated and sorted.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DataSet, RangeQuery, ResultSet, SearchStats


def default_threads() -> int:
    """MDRQ_THREADS environment override, else the machine's logical cores."""
    env = os.environ.get("MDRQ_THREADS")
    if env:
        t = int(env)
        if t >= 1:
            return t
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExecutorConfig:
    """Worker count t; the partition count defaults to t."""

    t: int

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("worker count must be at least 1")

    @property
    def p(self) -> int:
        return self.t


class WorkerPool:
    """Thin reusable wrapper over ThreadPoolExecutor.

    Tasks run inline when the pool is sized 1 (single-thread baselines must
    not pay pool overhead). The compiled kernels release the GIL, so tasks
    genuinely overlap.
    """

    def __init__(self, workers: int):
        if workers < 1:
            raise ValueError("worker count must be at least 1")
        self.workers = workers
        self._executor: ThreadPoolExecutor | None = None

    def run(self, tasks):
        """Run callables, returning their results in task order."""
        tasks = list(tasks)
        if self.workers == 1 or len(tasks) <= 1:
            return [task() for task in tasks]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        futures = [self._executor.submit(task) for task in tasks]
        return [f.result() for f in futures]

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass(frozen=True)
class PartitionLayout:
    """Balanced random assignment of n objects to p partitions."""

    p: int
    seed: int
    assignment: np.ndarray  # int32, partition id per object
    parts: tuple  # one int64 id array per partition

    @property
    def n(self) -> int:
        return int(self.assignment.size)

    def sizes(self) -> list[int]:
        return [int(ids.size) for ids in self.parts]


def make_layout(n: int, p: int, seed: int) -> PartitionLayout:
    """Split a seeded random permutation of ids into p near-equal runs.

    The first n mod p partitions take the extra object. p > n is allowed and
    leaves some partitions empty.
    """
    if p < 1:
        raise ValueError("partition count must be at least 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n).astype(np.int64)
    base, extra = divmod(n, p)
    parts = []
    assignment = np.empty(n, dtype=np.int32)
    start = 0
    for q in range(p):
        size = base + (1 if q < extra else 0)
        ids = perm[start:start + size]
        assignment[ids] = q
        parts.append(ids)
        start += size
    return PartitionLayout(p=p, seed=seed, assignment=assignment, parts=tuple(parts))


def _partition_seeds(seed: int, p: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(p)
    return [int(c.generate_state(1)[0]) for c in children]


class PartitionedIndex:
    """p independent access-method instances, one per partition.

    Searches fan out one task per instance; partial results already carry
    original object ids, and partitions are disjoint, so the merge is a
    plain concatenate-and-sort.
    """

    def __init__(self, name: str, instances, layout: PartitionLayout, threads: int):
        self.name = name
        self.instances = list(instances)
        self.layout = layout
        self._pool = WorkerPool(threads)

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        tasks = [
            (lambda inst=inst: inst.search_with_stats(query))
            for inst in self.instances
        ]
        outcomes = self._pool.run(tasks)
        stats = SearchStats()
        chunks = []
        for result, part_stats in outcomes:
            ids = result.ids if isinstance(result, ResultSet) else result
            if ids.size:
                chunks.append(ids)
            stats.merge(part_stats)
        if chunks:
            merged = np.sort(np.concatenate(chunks))
        else:
            merged = np.empty(0, dtype=np.int64)
        return ResultSet(merged), stats

    @property
    def total_objects(self) -> int:
        return sum(inst.size for inst in self.instances)

    def close(self) -> None:
        self._pool.close()


def build_partitioned(factory, data: DataSet, layout: PartitionLayout, *,
                      threads: int | None = None, name: str = "partitioned",
                      seed: int = 0) -> PartitionedIndex:
    """Build one instance per partition via factory(objects, ids, seed).

    Instance q sees only partition q's objects, with their original ids.
    """
    if layout.n != data.n:
        raise ValueError(f"layout covers {layout.n} objects, dataset has {data.n}")
    seeds = _partition_seeds(seed, layout.p)
    instances = []
    for q, ids in enumerate(layout.parts):
        objects = np.ascontiguousarray(data.values[ids])
        instances.append(factory(objects, ids.copy(), seeds[q]))
    return PartitionedIndex(name, instances, layout,
                            threads if threads is not None else layout.p)


def search_partitioned(index: PartitionedIndex, query: RangeQuery) -> ResultSet:
    return index.search(query)

"""In-memory kd-tree with round-robin delimiter dimensions.

Every node holds one data object. The delimiter dimension is depth mod m;
objects with a smaller or equal value in that dimension go left, strictly
greater goes right. Nodes live in a contiguous pool in insertion order and
are linked by int32 slot indices, which is what the compiled search kernel
walks.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import KernelMode, RangeQuery, ResultSet, SearchStats


class KdTree:
    name = "kdtree"

    def __init__(self, m: int, *, mode: KernelMode = KernelMode.SCALAR, capacity: int = 16):
        if m < 1:
            raise ValueError("dimensionality must be at least 1")
        self.m = m
        self.mode = mode
        self._count = 0
        self._max_depth = 0
        cap = max(capacity, 1)
        self._vals = np.empty((cap, m), dtype=np.float32)
        self._ids = np.empty(cap, dtype=np.int64)
        self._left = np.empty(cap, dtype=np.int32)
        self._right = np.empty(cap, dtype=np.int32)

    @property
    def size(self) -> int:
        return self._count

    @property
    def node_count(self) -> int:
        return self._count

    @property
    def max_depth(self) -> int:
        return self._max_depth

    def _grow(self) -> None:
        cap = self._vals.shape[0] * 2
        self._vals = np.resize(self._vals, (cap, self.m))
        self._ids = np.resize(self._ids, cap)
        self._left = np.resize(self._left, cap)
        self._right = np.resize(self._right, cap)

    def insert(self, obj, oid: int) -> None:
        """Descend comparing the delimiter dimension; new leaf at the first gap.

        Equal values go left; duplicates are permitted.
        """
        row = np.ascontiguousarray(obj, dtype=np.float32)
        if row.shape != (self.m,):
            raise ValueError(f"object must have {self.m} dimensions")
        if self._count == self._vals.shape[0]:
            self._grow()
        slot = self._count
        self._vals[slot] = row
        self._ids[slot] = oid
        self._left[slot] = -1
        self._right[slot] = -1
        self._count += 1
        if slot == 0:
            return
        vals, left, right = self._vals, self._left, self._right
        node = 0
        depth = 0
        while True:
            d = depth % self.m
            if row[d] <= vals[node, d]:
                nxt = left[node]
                if nxt < 0:
                    left[node] = slot
                    break
            else:
                nxt = right[node]
                if nxt < 0:
                    right[node] = slot
                    break
            node = nxt
            depth += 1
        self._max_depth = max(self._max_depth, depth + 1)

    @classmethod
    def build(cls, objects, ids, seed: int, *,
              mode: KernelMode = KernelMode.SCALAR) -> "KdTree":
        """Insert all objects in a seeded random order (bulk, kernel-backed)."""
        objects = np.ascontiguousarray(objects, dtype=np.float32)
        if objects.ndim != 2:
            raise ValueError("objects must be a 2-d matrix")
        n, m = objects.shape
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids must have one entry per object")
        order = np.random.default_rng(seed).permutation(n)
        tree = cls(m, mode=mode, capacity=max(n, 1))
        tree._vals[:n] = objects[order]
        tree._ids[:n] = ids[order]
        tree._count = n
        tree._max_depth = kernels.kd_build(tree._vals[:n], tree._left[:n], tree._right[:n])
        return tree

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.m:
            raise ValueError(f"query has {query.m} dimensions, tree has {self.m}")
        n = self._count
        if n == 0:
            return ResultSet(np.empty(0, np.int64)), SearchStats()
        slots, visited = kernels.kd_search(
            self._vals[:n], self._left[:n], self._right[:n],
            query.lower, query.upper, self.mode.code, self._max_depth)
        ids = np.sort(self._ids[slots]) if slots.size else np.empty(0, np.int64)
        return ResultSet(ids), SearchStats(
            objects_compared=int(visited), nodes_visited=int(visited))

    def audit(self) -> dict:
        """Verify the BST property per delimiter dimension over the whole tree.

        Walks every node carrying the ancestor-induced bounds: going left caps
        the delimiter dimension inclusively, going right bounds it strictly
        from below. Raises ValueError on any violation.
        """
        n = self._count
        stats = {"nodes": n, "max_depth": self._max_depth}
        if n == 0:
            return stats
        vals = self._vals[:n]
        left = self._left[:n]
        right = self._right[:n]
        seen = np.zeros(n, dtype=bool)
        root_lo = np.full(self.m, -np.inf)  # exclusive lower bounds
        root_hi = np.full(self.m, np.inf)   # inclusive upper bounds
        stack = [(0, 0, root_lo, root_hi)]
        max_seen_depth = 0
        while stack:
            slot, depth, lo, hi = stack.pop()
            if seen[slot]:
                raise ValueError(f"node {slot} reachable twice; pool links corrupt")
            seen[slot] = True
            max_seen_depth = max(max_seen_depth, depth)
            row = vals[slot]
            ok = (row > lo) & (row <= hi)
            if not ok.all():
                bad = int(np.flatnonzero(~ok)[0])
                raise ValueError(
                    f"BST violation at node {slot}, dimension {bad}: "
                    f"{row[bad]} outside ({lo[bad]}, {hi[bad]}]")
            d = depth % self.m
            v = float(row[d])
            if left[slot] >= 0:
                child_hi = hi.copy()
                child_hi[d] = min(child_hi[d], v)
                stack.append((int(left[slot]), depth + 1, lo, child_hi))
            if right[slot] >= 0:
                child_lo = lo.copy()
                child_lo[d] = max(child_lo[d], v)
                stack.append((int(right[slot]), depth + 1, child_lo, hi))
        if not seen.all():
            raise ValueError("tree does not reach every pool slot")
        if max_seen_depth != self._max_depth:
            raise ValueError(
                f"recorded max depth {self._max_depth} != observed {max_seen_depth}")
        return stats

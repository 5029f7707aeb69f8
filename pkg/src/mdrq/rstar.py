"""In-memory R*-tree over points.

Follows the classic design: ChooseSubtree by least overlap enlargement at
the level above the leaves and least area enlargement higher up, forced
reinsertion of the farthest entries on the first overflow per level per
insertion, and the topological split (axis by minimum margin sum,
distribution by minimum overlap, ties by area). Points are stored as
degenerate rectangles so one MBR code path serves leaves and inner nodes.

Node capacities default to 96 entries and are configurable; minimum fill is
40% of capacity and the reinsert fraction 30%, applied farthest-first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import KernelMode, RangeQuery, ResultSet, SearchStats


@dataclass(frozen=True)
class RStarConfig:
    capacity: int = 96
    min_fill: float = 0.4
    reinsert_fraction: float = 0.3
    choose_subtree_k: int = 32  # candidate cap for the overlap computation

    def __post_init__(self):
        if self.capacity < 2:
            raise ValueError("node capacity must be at least 2")
        if not 0.0 < self.min_fill <= 0.5:
            raise ValueError("min fill fraction must be in (0, 0.5]")
        if not 0.0 < self.reinsert_fraction < 1.0:
            raise ValueError("reinsert fraction must be in (0, 1)")

    @property
    def min_entries(self) -> int:
        return max(1, int(self.min_fill * self.capacity))

    def reinsert_count(self, overflow_size: int) -> int:
        return max(1, math.ceil(self.reinsert_fraction * overflow_size))


@dataclass(frozen=True)
class Mbr:
    """Axis-aligned minimum bounding rectangle (inclusive bounds)."""

    low: np.ndarray
    high: np.ndarray

    @classmethod
    def of(cls, low, high) -> "Mbr":
        low = np.ascontiguousarray(low, dtype=np.float32)
        high = np.ascontiguousarray(high, dtype=np.float32)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("low/high must be 1-d and of equal length")
        if (low > high).any():
            raise ValueError("MBR low bound exceeds high bound")
        return cls(low, high)

    @classmethod
    def of_point(cls, point) -> "Mbr":
        return cls.of(point, point)


def mbr_intersects(mbr: Mbr, query: RangeQuery,
                   mode: KernelMode = KernelMode.VECTORIZED) -> bool:
    """True iff query.lower <= mbr.high and query.upper >= mbr.low in all dims."""
    if mbr.low.shape[0] != query.m:
        raise ValueError("dimension mismatch between MBR and query")
    return kernels.mbr_intersect(mbr.low, mbr.high, query.lower, query.upper, mode.code)


class _Node:
    __slots__ = ("level", "count", "lows", "highs", "children", "ids",
                 "parent", "slot", "mbr_low", "mbr_high")

    def __init__(self, level: int, capacity: int, m: int):
        self.level = level  # 0 = leaf
        self.count = 0
        # one spare row so an overflowing add fits before treatment
        self.lows = np.empty((capacity + 1, m), dtype=np.float32)
        self.highs = np.empty((capacity + 1, m), dtype=np.float32)
        self.children: list[_Node] | None = None if level == 0 else []
        self.ids = np.empty(capacity + 1, dtype=np.int64) if level == 0 else None
        self.parent: _Node | None = None
        self.slot = -1
        self.mbr_low: np.ndarray | None = None
        self.mbr_high: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.level == 0

    def recompute_mbr(self) -> None:
        if self.count == 0:
            self.mbr_low = None
            self.mbr_high = None
        else:
            self.mbr_low = self.lows[:self.count].min(axis=0)
            self.mbr_high = self.highs[:self.count].max(axis=0)

    def add(self, elow, ehigh, payload) -> None:
        i = self.count
        self.lows[i] = elow
        self.highs[i] = ehigh
        if self.is_leaf:
            self.ids[i] = payload
        else:
            payload.parent = self
            payload.slot = i
            self.children.append(payload)
        self.count += 1
        if self.mbr_low is None:
            self.mbr_low = self.lows[i].copy()
            self.mbr_high = self.highs[i].copy()
        else:
            np.minimum(self.mbr_low, elow, out=self.mbr_low)
            np.maximum(self.mbr_high, ehigh, out=self.mbr_high)


def _volumes(lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    # float64 accumulation: wide domains overflow float32 products
    return np.prod(highs - lows, axis=-1, dtype=np.float64)


def _margins(lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    return np.sum(highs - lows, axis=-1, dtype=np.float64)


class RStarTree:
    name = "rstar"

    def __init__(self, m: int, *, config: RStarConfig | None = None,
                 mode: KernelMode = KernelMode.SCALAR):
        if m < 1:
            raise ValueError("dimensionality must be at least 1")
        self.m = m
        self.config = config or RStarConfig()
        self.mode = mode
        self._root = _Node(0, self.config.capacity, m)
        self._size = 0
        self._height = 1
        self.reinsert_events = 0
        self.reinserted_entries = 0
        self.split_events = 0

    @property
    def size(self) -> int:
        return self._size

    @property
    def height(self) -> int:
        return self._height

    # -- insertion ---------------------------------------------------------

    def insert(self, obj, oid: int) -> None:
        point = np.ascontiguousarray(obj, dtype=np.float32)
        if point.shape != (self.m,):
            raise ValueError(f"object must have {self.m} dimensions")
        self._insert_entry(point, point.copy(), int(oid), 0, set())
        self._size += 1

    @classmethod
    def build(cls, objects, ids, seed: int, *, mode: KernelMode = KernelMode.SCALAR,
              config: RStarConfig | None = None) -> "RStarTree":
        """Seeded random-order incremental insertion; no bulk loading."""
        objects = np.ascontiguousarray(objects, dtype=np.float32)
        if objects.ndim != 2:
            raise ValueError("objects must be a 2-d matrix")
        n, m = objects.shape
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids must have one entry per object")
        tree = cls(m, config=config, mode=mode)
        order = np.random.default_rng(seed).permutation(n)
        for i in order:
            tree.insert(objects[i], int(ids[i]))
        return tree

    def _insert_entry(self, elow, ehigh, payload, level: int, reinserted: set) -> None:
        node = self._choose_node(elow, ehigh, level)
        node.add(elow, ehigh, payload)
        self._extend_upward(node, elow, ehigh)
        if node.count > self.config.capacity:
            self._overflow(node, reinserted)

    def _choose_node(self, elow, ehigh, level: int) -> _Node:
        node = self._root
        while node.level > level:
            node = node.children[self._choose_child(node, elow, ehigh)]
        return node

    def _choose_child(self, node: _Node, elow, ehigh) -> int:
        c = node.count
        lows = node.lows[:c]
        highs = node.highs[:c]
        enlargement, areas = kernels.area_enlargements(lows, highs, elow, ehigh)
        if node.level > 1:
            # children are inner nodes: least area enlargement, ties by area
            return int(np.lexsort((np.arange(c), areas, enlargement))[0])
        # children are leaves: least overlap enlargement among the candidates
        # with the smallest area enlargement. A candidate with zero area
        # enlargement already contains the entry, so its overlap enlargement
        # is exactly zero, the global minimum (an enlarged box can only grow
        # its sibling overlaps), and it wins every tie-break too; the overlap
        # computation is skipped entirely then.
        zero = np.flatnonzero(enlargement <= 0.0)
        if zero.size:
            return int(zero[np.lexsort((zero, areas[zero]))[0]])
        k = self.config.choose_subtree_k
        if c > k:
            cand = np.argsort(enlargement, kind="stable")[:k].astype(np.int64)
        else:
            cand = np.arange(c, dtype=np.int64)
        overlap_enl = kernels.leaf_overlap_enlargements(lows, highs, elow, ehigh, cand)
        pick = np.lexsort((cand, areas[cand], enlargement[cand], overlap_enl))[0]
        return int(cand[pick])

    def _extend_upward(self, node: _Node, elow, ehigh) -> None:
        cur = node
        while cur.parent is not None:
            p = cur.parent
            np.minimum(p.lows[cur.slot], elow, out=p.lows[cur.slot])
            np.maximum(p.highs[cur.slot], ehigh, out=p.highs[cur.slot])
            np.minimum(p.mbr_low, elow, out=p.mbr_low)
            np.maximum(p.mbr_high, ehigh, out=p.mbr_high)
            cur = p

    def _tighten_upward(self, node: _Node) -> None:
        cur = node
        while cur.parent is not None:
            p = cur.parent
            p.lows[cur.slot] = cur.mbr_low
            p.highs[cur.slot] = cur.mbr_high
            p.recompute_mbr()
            cur = p

    def _overflow(self, node: _Node, reinserted: set) -> None:
        # First overflow at a level within one insertion: forced reinsert.
        # Second: split. The level flags are shared by the reinserts, so a
        # reinserted entry overflowing the same level again triggers the split.
        if node.level not in reinserted:
            reinserted.add(node.level)
            self._forced_reinsert(node, reinserted)
        else:
            parent = self._split(node)
            if parent is not None and parent.count > self.config.capacity:
                self._overflow(parent, reinserted)

    def _forced_reinsert(self, node: _Node, reinserted: set) -> None:
        c = node.count
        p = self.config.reinsert_count(c)
        self.reinsert_events += 1
        self.reinserted_entries += p
        centers = (node.lows[:c].astype(np.float64) + node.highs[:c]) / 2.0
        node_center = (node.mbr_low.astype(np.float64) + node.mbr_high) / 2.0
        dist = ((centers - node_center) ** 2).sum(axis=1)
        order = np.argsort(-dist, kind="stable")  # farthest first
        removed_idx = order[:p]
        removed = [
            (node.lows[i].copy(), node.highs[i].copy(),
             int(node.ids[i]) if node.is_leaf else node.children[i])
            for i in removed_idx
        ]
        keep = np.setdiff1d(np.arange(c), removed_idx)
        self._compact(node, keep)
        self._tighten_upward(node)
        for elow, ehigh, payload in removed:
            self._insert_entry(elow, ehigh, payload, node.level, reinserted)

    def _compact(self, node: _Node, keep: np.ndarray) -> None:
        k = keep.size
        node.lows[:k] = node.lows[keep]
        node.highs[:k] = node.highs[keep]
        if node.is_leaf:
            node.ids[:k] = node.ids[keep]
        else:
            node.children = [node.children[i] for i in keep]
            for s, child in enumerate(node.children):
                child.slot = s
        node.count = k
        node.recompute_mbr()

    def _split(self, node: _Node) -> _Node | None:
        """Topological split; returns the parent (None when the root split)."""
        self.split_events += 1
        c = node.count
        g1, g2 = _choose_split(node.lows[:c], node.highs[:c], self.config.min_entries)
        sibling = _Node(node.level, self.config.capacity, self.m)
        if node.is_leaf:
            for i in g2:
                sibling.add(node.lows[i].copy(), node.highs[i].copy(), int(node.ids[i]))
        else:
            for i in g2:
                sibling.add(node.lows[i].copy(), node.highs[i].copy(), node.children[i])
        self._compact(node, g1)
        if node.parent is None:
            new_root = _Node(node.level + 1, self.config.capacity, self.m)
            new_root.add(node.mbr_low.copy(), node.mbr_high.copy(), node)
            new_root.add(sibling.mbr_low.copy(), sibling.mbr_high.copy(), sibling)
            self._root = new_root
            self._height += 1
            return None
        parent = node.parent
        parent.lows[node.slot] = node.mbr_low
        parent.highs[node.slot] = node.mbr_high
        parent.recompute_mbr()
        self._tighten_upward(parent)
        parent.add(sibling.mbr_low.copy(), sibling.mbr_high.copy(), sibling)
        self._extend_upward(parent, sibling.mbr_low, sibling.mbr_high)
        return parent

    # -- search ------------------------------------------------------------

    def search(self, query: RangeQuery) -> ResultSet:
        return self.search_with_stats(query)[0]

    def search_with_stats(self, query: RangeQuery) -> tuple[ResultSet, SearchStats]:
        if query.m != self.m:
            raise ValueError(f"query has {query.m} dimensions, tree has {self.m}")
        stats = SearchStats()
        chunks = []
        mode = self.mode.code
        stack = [self._root]
        while stack:
            node = stack.pop()
            stats.nodes_visited += 1
            c = node.count
            if c == 0:
                continue
            if node.is_leaf:
                local, compared, early = kernels.scan_rows(
                    node.lows[:c], query.lower, query.upper, mode)
                stats.objects_compared += compared
                stats.early_breaks += early
                if local.size:
                    chunks.append(node.ids[local])
            else:
                hit = (
                    (query.lower <= node.highs[:c]).all(axis=1)
                    & (query.upper >= node.lows[:c]).all(axis=1)
                )
                for i in np.flatnonzero(hit):
                    stack.append(node.children[i])
        merged = np.sort(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
        return ResultSet(merged), stats

    # -- diagnostics -------------------------------------------------------

    def audit(self) -> dict:
        """Full structural audit; raises ValueError on the first violation.

        Checks exact MBR minimality and containment, balance (uniform leaf
        depth), capacity and minimum fill, parent/slot links, and that the
        stored ids are unique and complete.
        """
        cfg = self.config
        leaf_levels = set()
        all_ids = []
        occupancy = []
        nodes = 0

        def walk(node: _Node, depth: int, is_root: bool):
            nonlocal nodes
            nodes += 1
            c = node.count
            if c > cfg.capacity:
                raise ValueError(f"node exceeds capacity: {c} > {cfg.capacity}")
            if not is_root and c < cfg.min_entries:
                raise ValueError(f"non-root node below min fill: {c} < {cfg.min_entries}")
            if is_root and not node.is_leaf and c < 2:
                raise ValueError("inner root must have at least 2 entries")
            if c > 0:
                exp_low = node.lows[:c].min(axis=0)
                exp_high = node.highs[:c].max(axis=0)
                if not (np.array_equal(node.mbr_low, exp_low)
                        and np.array_equal(node.mbr_high, exp_high)):
                    raise ValueError("node MBR is not the exact union of its entries")
            if node.is_leaf:
                leaf_levels.add(depth)
                if node.level != 0:
                    raise ValueError("leaf node with non-zero level")
                if c and not np.array_equal(node.lows[:c], node.highs[:c]):
                    raise ValueError("leaf entry is not a degenerate point rectangle")
                all_ids.extend(node.ids[:c].tolist())
            else:
                for i, child in enumerate(node.children):
                    if child.parent is not node or child.slot != i:
                        raise ValueError("broken parent/slot link")
                    if child.level != node.level - 1:
                        raise ValueError("child level is not parent level - 1")
                    if child.count == 0:
                        raise ValueError("empty non-root node")
                    if not (np.array_equal(node.lows[i], child.mbr_low)
                            and np.array_equal(node.highs[i], child.mbr_high)):
                        raise ValueError("stored child MBR differs from child's own MBR")
                    walk(child, depth + 1, False)
            if not is_root:
                occupancy.append(c)

        walk(self._root, 0, True)
        if len(leaf_levels) > 1:
            raise ValueError(f"leaves at multiple depths: {sorted(leaf_levels)}")
        if len(all_ids) != self._size:
            raise ValueError(f"stored {len(all_ids)} ids, inserted {self._size}")
        if len(set(all_ids)) != len(all_ids):
            raise ValueError("duplicate ids stored")
        return {
            "nodes": nodes,
            "height": self._height,
            "entries": len(all_ids),
            "occupancy_min": min(occupancy) if occupancy else self._root.count,
            "occupancy_mean": float(np.mean(occupancy)) if occupancy else float(self._root.count),
            "occupancy_max": max(occupancy) if occupancy else self._root.count,
        }

    def node_stats(self) -> dict:
        """Occupancy histogram and sibling MBR overlap volume per level."""
        per_level: dict[int, list[int]] = {}
        overlap = 0.0

        def walk(node: _Node):
            nonlocal overlap
            per_level.setdefault(node.level, []).append(node.count)
            if node.is_leaf:
                return
            c = node.count
            if c > 1:
                lows = node.lows[:c]
                highs = node.highs[:c]
                il = np.maximum(lows[:, None, :], lows[None, :, :]).astype(np.float64)
                ih = np.minimum(highs[:, None, :], highs[None, :, :]).astype(np.float64)
                vols = np.prod(np.clip(ih - il, 0.0, None), axis=-1)
                overlap += (vols.sum() - np.trace(vols)) / 2.0
            for child in node.children:
                walk(child)

        walk(self._root)
        return {
            "occupancy_per_level": {lvl: sorted(cnts) for lvl, cnts in per_level.items()},
            "sibling_overlap_volume": overlap,
        }


def _choose_split(lows: np.ndarray, highs: np.ndarray, min_entries: int):
    """R* split: axis by least margin sum, distribution by least overlap.

    Returns (keep_idx, move_idx) entry index arrays for the two groups.
    """
    c, m = lows.shape
    first = min_entries
    last = c - min_entries  # group-1 sizes in [first, last]
    if first > last:
        raise ValueError("not enough entries to split at this min fill")

    def distributions(axis: int, by_high: bool):
        if by_high:
            order = np.lexsort((lows[:, axis], highs[:, axis]))
        else:
            order = np.lexsort((highs[:, axis], lows[:, axis]))
        slow = lows[order]
        shigh = highs[order]
        pre_low = np.minimum.accumulate(slow, axis=0)
        pre_high = np.maximum.accumulate(shigh, axis=0)
        suf_low = np.minimum.accumulate(slow[::-1], axis=0)[::-1]
        suf_high = np.maximum.accumulate(shigh[::-1], axis=0)[::-1]
        sizes = np.arange(first, last + 1)
        g1_low = pre_low[sizes - 1]
        g1_high = pre_high[sizes - 1]
        g2_low = suf_low[sizes]
        g2_high = suf_high[sizes]
        return order, sizes, g1_low, g1_high, g2_low, g2_high

    best_axis = -1
    best_margin = np.inf
    for axis in range(m):
        total = 0.0
        for by_high in (False, True):
            _, _, g1l, g1h, g2l, g2h = distributions(axis, by_high)
            total += float((_margins(g1l, g1h) + _margins(g2l, g2h)).sum())
        if total < best_margin:
            best_margin = total
            best_axis = axis

    best = None  # (overlap, area, seq, order, size)
    seq = 0
    for by_high in (False, True):
        order, sizes, g1l, g1h, g2l, g2h = distributions(best_axis, by_high)
        il = np.maximum(g1l, g2l).astype(np.float64)
        ih = np.minimum(g1h, g2h).astype(np.float64)
        overlaps = np.prod(np.clip(ih - il, 0.0, None), axis=-1)
        areas = _volumes(g1l, g1h) + _volumes(g2l, g2h)
        for i, size in enumerate(sizes):
            key = (float(overlaps[i]), float(areas[i]), seq)
            if best is None or key < best[0]:
                best = (key, order, int(size))
            seq += 1
    _, order, size = best
    return np.sort(order[:size]), np.sort(order[size:])

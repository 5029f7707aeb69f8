import math

import numpy as np
import pytest

from mdrq import (
    KernelMode,
    Mbr,
    RangeQuery,
    RStarConfig,
    RStarTree,
    mbr_intersects,
    sequential_scan,
)
from mdrq.workload import GeneratorSpec, gen_clustered, gen_uniform, pair_query_batch


class TestMbrIntersects:
    def test_disjoint_first_dim(self):
        mbr = Mbr.of([0.0, 0.0], [1.0, 1.0])
        assert mbr_intersects(mbr, RangeQuery([2.0, 0.0], [3.0, 1.0])) is False

    def test_touching_boundary_intersects(self):
        mbr = Mbr.of([0.0, 0.0], [1.0, 1.0])
        assert mbr_intersects(mbr, RangeQuery([1.0, 0.0], [2.0, 1.0])) is True

    def test_equal_boxes_intersect(self):
        mbr = Mbr.of([0.2, 0.3], [0.6, 0.7])
        assert mbr_intersects(mbr, RangeQuery([0.2, 0.3], [0.6, 0.7])) is True

    def test_modes_agree_on_wide_dims(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            low = rng.random(19).astype(np.float32)
            high = low + rng.random(19).astype(np.float32) * 0.2
            qlo = rng.random(19).astype(np.float32)
            qhi = qlo + rng.random(19).astype(np.float32) * 0.2
            mbr = Mbr.of(low, high)
            q = RangeQuery(qlo, qhi)
            assert mbr_intersects(mbr, q, KernelMode.SCALAR) == \
                mbr_intersects(mbr, q, KernelMode.VECTORIZED)

    def test_invalid_mbr_rejected(self):
        with pytest.raises(ValueError):
            Mbr.of([1.0], [0.0])


class TestInsert:
    def test_first_insert_degenerate_root(self):
        tree = RStarTree(2)
        tree.insert([0.3, 0.7], 0)
        assert tree.size == 1 and tree.height == 1
        root = tree._root
        assert root.is_leaf and root.count == 1
        assert np.array_equal(root.mbr_low, root.mbr_high)

    def test_forced_reinsert_before_split_desk_trace(self):
        # capacity 4, five collinear points: the overflow triggers one forced
        # reinsertion of ceil(0.3 * 5) = 2 entries before any split happens
        cfg = RStarConfig(capacity=4)
        tree = RStarTree(1, config=cfg)
        for i, v in enumerate([0.0, 1.0, 2.0, 3.0, 4.0]):
            tree.insert([v], i)
        assert tree.reinsert_events == 1
        assert tree.reinserted_entries == 2
        assert tree.split_events == 1
        assert tree.size == 5
        tree.audit()

    def test_one_reinsert_pass_per_level_per_insertion(self):
        cfg = RStarConfig(capacity=4)
        tree = RStarTree(2, config=cfg)
        rng = np.random.default_rng(2)
        for i in range(200):
            tree.insert(rng.random(2).astype(np.float32), i)
        tree.audit()
        assert tree.split_events > 0 and tree.reinsert_events > 0

    def test_balance_and_containment_after_build(self):
        data = gen_uniform(GeneratorSpec("uniform", 10_000, 5, seed=3))
        tree = RStarTree.build(data.values, np.arange(10_000, dtype=np.int64), seed=4)
        stats = tree.audit()
        assert stats["entries"] == 10_000
        assert stats["occupancy_min"] >= tree.config.min_entries


class TestSearch:
    def test_full_domain_returns_all(self):
        data = gen_uniform(GeneratorSpec("uniform", 2000, 3, seed=5))
        tree = RStarTree.build(data.values, np.arange(2000, dtype=np.int64), seed=6)
        rs = tree.search(RangeQuery.full_domain(3))
        assert rs.ids.tolist() == list(range(2000))

    def test_disjoint_query_visits_only_root(self):
        data = gen_uniform(GeneratorSpec("uniform", 2000, 2, seed=7))
        tree = RStarTree.build(data.values, np.arange(2000, dtype=np.int64), seed=8)
        rs, stats = tree.search_with_stats(RangeQuery([5.0, 5.0], [6.0, 6.0]))
        assert len(rs) == 0
        assert stats.nodes_visited == 1

    def test_oracle_equivalence_uniform(self):
        data = gen_uniform(GeneratorSpec("uniform", 3000, 5, seed=9))
        ids = np.arange(3000, dtype=np.int64)
        for mode in (KernelMode.SCALAR, KernelMode.VECTORIZED):
            tree = RStarTree.build(data.values, ids, seed=10, mode=mode)
            for q in pair_query_batch(data, 40, 11):
                assert tree.search(q) == sequential_scan(data, q)

    def test_oracle_equivalence_clustered(self):
        data = gen_clustered(GeneratorSpec(
            "clustered", 2000, 3, cluster_count=5, seed=12))
        tree = RStarTree.build(data.values, np.arange(2000, dtype=np.int64), seed=13)
        for q in pair_query_batch(data, 30, 14):
            assert tree.search(q) == sequential_scan(data, q)

    def test_visited_nodes_lower_bound(self):
        data = gen_uniform(GeneratorSpec("uniform", 5000, 4, seed=15))
        tree = RStarTree.build(data.values, np.arange(5000, dtype=np.int64), seed=16)
        for q in pair_query_batch(data, 10, 17):
            rs, stats = tree.search_with_stats(q)
            assert stats.nodes_visited >= math.ceil(len(rs) / tree.config.capacity)

    def test_empty_tree_searches_empty(self):
        tree = RStarTree(3)
        assert len(tree.search(RangeQuery.full_domain(3))) == 0


class TestBuild:
    def test_zero_objects(self):
        tree = RStarTree.build(np.empty((0, 2), np.float32), np.empty(0, np.int64), seed=0)
        assert tree.size == 0
        tree.audit()

    def test_entry_conservation(self):
        data = gen_uniform(GeneratorSpec("uniform", 3456, 3, seed=18))
        tree = RStarTree.build(data.values, np.arange(3456, dtype=np.int64), seed=19)
        assert tree.audit()["entries"] == 3456

    def test_min_fill_after_large_build(self):
        data = gen_uniform(GeneratorSpec("uniform", 20_000, 5, seed=20))
        tree = RStarTree.build(data.values, np.arange(20_000, dtype=np.int64), seed=21)
        stats = tree.audit()
        assert stats["occupancy_min"] >= tree.config.min_entries

    def test_custom_ids_preserved(self):
        data = gen_uniform(GeneratorSpec("uniform", 100, 2, seed=22))
        ids = np.arange(1000, 1100, dtype=np.int64)
        tree = RStarTree.build(data.values, ids, seed=23)
        rs = tree.search(RangeQuery.full_domain(2))
        assert rs.ids.tolist() == list(range(1000, 1100))


class TestConfig:
    def test_min_entries_fraction(self):
        assert RStarConfig(capacity=96).min_entries == 38
        assert RStarConfig(capacity=4).min_entries == 1

    def test_reinsert_count_ceil(self):
        cfg = RStarConfig(capacity=4)
        assert cfg.reinsert_count(5) == math.ceil(0.3 * 5)
        assert RStarConfig(capacity=96).reinsert_count(97) == math.ceil(0.3 * 97)

    def test_capacity_validation(self):
        with pytest.raises(ValueError):
            RStarConfig(capacity=1)

    def test_node_stats_dump(self):
        data = gen_uniform(GeneratorSpec("uniform", 3000, 2, seed=24))
        tree = RStarTree.build(data.values, np.arange(3000, dtype=np.int64), seed=25)
        stats = tree.node_stats()
        assert 0 in stats["occupancy_per_level"]
        assert stats["sibling_overlap_volume"] >= 0.0

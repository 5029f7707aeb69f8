import numpy as np
import pytest

from mdrq import (
    BenchmarkConfig,
    KernelMode,
    emit_report,
    physical_cores,
    run_benchmark,
    selectivity_oracle,
    sweep,
)
from mdrq.bench import (
    REPORT_COLUMNS,
    collect_selectivity_buckets,
    materialize,
    read_reports_jsonl,
    write_reports_jsonl,
)
from mdrq.workload import GeneratorSpec, gen_uniform, pair_query_batch


class FakeClock:
    def __init__(self, values):
        self.values = list(values)

    def __call__(self):
        return self.values.pop(0)


def tiny_config(**kw):
    defaults = dict(method="sequential", threads=1, kernel=KernelMode.SCALAR,
                    repetitions=1, seed=3, n=500, m=3, queries=8)
    defaults.update(kw)
    return BenchmarkConfig(**defaults)


class TestRunBenchmark:
    def test_throughput_is_queries_over_seconds(self):
        cfg = tiny_config(repetitions=1)
        data, queries = materialize(cfg)
        # clock: build start/end, then one timed rep of exactly 2.0s
        clock = FakeClock([0.0, 0.5, 10.0, 12.0])
        report = run_benchmark(cfg, data, queries, clock=clock)
        assert report.seconds == 2.0
        assert report.qps == len(queries) / 2.0
        assert report.build_seconds == 0.5

    def test_median_of_repetitions(self):
        cfg = tiny_config(repetitions=3)
        data, queries = materialize(cfg)
        clock = FakeClock([0.0, 0.1, 0.0, 2.0, 0.0, 2.2, 0.0, 1.9])
        report = run_benchmark(cfg, data, queries, clock=clock)
        assert report.seconds == 2.0

    def test_selectivity_comes_from_oracle(self):
        cfg = tiny_config(method="kdtree", queries=6)
        data, queries = materialize(cfg)
        report = run_benchmark(cfg, data, queries)
        expected = np.mean([selectivity_oracle(data, q).joint for q in queries])
        assert report.avg_selectivity == pytest.approx(float(expected))

    def test_methods_agree_on_result_totals(self):
        cfg = tiny_config(n=2000, queries=20)
        data, queries = materialize(cfg)
        totals = {}
        for name in ("sequential", "kdtree", "vertical"):
            report = run_benchmark(tiny_config(method=name, n=2000, queries=20),
                                   data, queries)
            totals[name] = report.result_total
        assert len(set(totals.values())) == 1

    def test_dimension_mismatch_rejected(self):
        cfg = tiny_config()
        data, _ = materialize(cfg)
        bad = pair_query_batch(gen_uniform(GeneratorSpec("uniform", 50, 7, seed=1)), 3, 2)
        with pytest.raises(ValueError, match="dimensionality"):
            run_benchmark(cfg, data, bad)

    def test_counters_echoed(self):
        cfg = tiny_config(method="vertical", queries=5)
        data, queries = materialize(cfg)
        report = run_benchmark(cfg, data, queries)
        assert report.objects_compared > 0
        assert report.peak_rss_kb > 0


class TestSweep:
    def test_threads_axis_report_cardinality(self):
        base = tiny_config(method="horizontal", queries=5, repetitions=1)
        reports, warnings = sweep("threads", [1, 2], base,
                                  methods=["horizontal", "kdtree"])
        assert len(reports) == 4
        assert not warnings
        assert {r.threads for r in reports} == {1, 2}

    def test_dimensionality_axis(self):
        base = tiny_config(queries=4, repetitions=1)
        reports, warnings = sweep("dimensionality", [2, 3], base)
        assert [r.m for r in reports] == [2, 3]

    def test_infeasible_point_warns_and_skips(self):
        base = tiny_config(queries=4, repetitions=1)
        reports, warnings = sweep("dimensionality", [0, 2], base)
        assert len(reports) == 1
        assert len(warnings) == 1 and "infeasible" in warnings[0]

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            sweep("voltage", [1], tiny_config())

    def test_selectivity_axis_bins_queries(self):
        base = tiny_config(n=20_000, m=2, queries=4, repetitions=1,
                           method="sequential")
        reports, warnings = sweep("selectivity", [0.05, 0.5], base)
        assert 1 <= len(reports) <= 2
        for r in reports:
            assert r.queries >= 1


class TestCollectBuckets:
    def test_exact_bucket_membership(self):
        data = gen_uniform(GeneratorSpec("uniform", 30_000, 2, seed=5))
        buckets = [(0.0, 0.01), (0.2, 1.0)]
        out = collect_selectivity_buckets(data, buckets, 5, seed=6)
        assert all(len(qs) == 5 for qs in out)
        for (lo, hi), qs in zip(buckets, out):
            for q in qs:
                assert lo <= selectivity_oracle(data, q).joint <= hi


class TestReports:
    def test_csv_header_exact(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report([], path)
        assert path.read_text() == (
            "method,n,m,threads,partitions,kernel,clusters,avg_selectivity,"
            "queries,seconds,qps,objects_compared,nodes_visited\n")

    def test_one_report_two_lines(self, tmp_path):
        cfg = tiny_config(queries=3)
        data, queries = materialize(cfg)
        report = run_benchmark(cfg, data, queries)
        path = tmp_path / "r.csv"
        emit_report([report], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("sequential,500,3,1,1,scalar,0,")

    def test_reemission_is_byte_identical(self, tmp_path):
        cfg = tiny_config(queries=3)
        data, queries = materialize(cfg)
        report = run_benchmark(cfg, data, queries)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_report([report], p1)
        emit_report([report], p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_jsonl_roundtrip(self, tmp_path):
        cfg = tiny_config(queries=3)
        data, queries = materialize(cfg)
        report = run_benchmark(cfg, data, queries)
        path = tmp_path / "r.jsonl"
        write_reports_jsonl([report], path)
        back = read_reports_jsonl(path)
        assert back == [report]

    def test_report_columns_are_spec_header(self):
        assert REPORT_COLUMNS == (
            "method", "n", "m", "threads", "partitions", "kernel", "clusters",
            "avg_selectivity", "queries", "seconds", "qps",
            "objects_compared", "nodes_visited")


def test_physical_cores_override():
    assert physical_cores(4) == 4
    assert physical_cores() >= 1
    with pytest.raises(ValueError):
        physical_cores(0)

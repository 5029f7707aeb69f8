import numpy as np
import pytest

from mdrq import cli, read_dataset
from mdrq.core import ResultSet, SearchStats
from mdrq.workload import read_queries


def run(args):
    return cli.main(args)


class TestGen:
    def test_uniform_roundtrip(self, tmp_path):
        out = tmp_path / "d.bin"
        assert run(["gen", "--kind", "uniform", "--n", "500", "--dims", "4",
                    "--seed", "7", "--out", str(out)]) == 0
        data = read_dataset(out)
        assert data.n == 500 and data.m == 4

    def test_n_zero_valid_empty_file(self, tmp_path):
        out = tmp_path / "e.bin"
        assert run(["gen", "--n", "0", "--dims", "3", "--out", str(out)]) == 0
        assert read_dataset(out).n == 0

    def test_gmrqb_kind(self, tmp_path):
        out = tmp_path / "g.bin"
        assert run(["gen", "--kind", "gmrqb", "--n", "200", "--out", str(out)]) == 0
        assert read_dataset(out).m == 19

    def test_csv_ingestion(self, tmp_path):
        csv = tmp_path / "in.csv"
        csv.write_text("a,b\n0.5,red\n0.7,blue\n")
        out = tmp_path / "c.bin"
        assert run(["gen", "--csv", str(csv), "--schema", "numeric,categorical",
                    "--out", str(out)]) == 0
        assert read_dataset(out).n == 2

    def test_csv_without_schema_is_usage_error(self, tmp_path):
        csv = tmp_path / "in.csv"
        csv.write_text("a\n1\n")
        assert run(["gen", "--csv", str(csv), "--out", str(tmp_path / "x.bin")]) == 1


class TestQueries:
    def test_pair_batch(self, tmp_path):
        data_path = tmp_path / "d.bin"
        run(["gen", "--n", "300", "--dims", "3", "--out", str(data_path)])
        q_path = tmp_path / "q.jsonl"
        assert run(["queries", "--data", str(data_path), "--count", "25",
                    "--out", str(q_path)]) == 0
        assert len(read_queries(q_path)) == 25

    def test_template_batch(self, tmp_path):
        data_path = tmp_path / "g.bin"
        run(["gen", "--kind", "gmrqb", "--n", "300", "--out", str(data_path)])
        q_path = tmp_path / "q.jsonl"
        assert run(["queries", "--data", str(data_path), "--kind", "template:1",
                    "--count", "10", "--out", str(q_path)]) == 0
        queries = read_queries(q_path)
        assert all(q.queried_dims.size == 2 for q in queries)


class TestBench:
    def test_bench_writes_csv_and_jsonl(self, tmp_path):
        out = tmp_path / "r.csv"
        jout = tmp_path / "r.jsonl"
        assert run(["bench", "--method", "sequential,kdtree", "--n", "800",
                    "--dims", "3", "--queries", "5", "--threads", "2",
                    "--repetitions", "1", "--out", str(out),
                    "--json-out", str(jout)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("method,n,m,threads")
        assert len(lines) == 3
        assert len(jout.read_text().splitlines()) == 2

    def test_bench_with_files(self, tmp_path):
        data_path = tmp_path / "d.bin"
        q_path = tmp_path / "q.jsonl"
        run(["gen", "--n", "400", "--dims", "3", "--out", str(data_path)])
        run(["queries", "--data", str(data_path), "--count", "6", "--out", str(q_path)])
        assert run(["bench", "--method", "horizontal", "--data", str(data_path),
                    "--queries-file", str(q_path), "--threads", "2",
                    "--repetitions", "1"]) == 0

    def test_dimension_mismatch_exits_1(self, tmp_path):
        data_path = tmp_path / "d.bin"
        other_path = tmp_path / "o.bin"
        q_path = tmp_path / "q.jsonl"
        run(["gen", "--n", "100", "--dims", "3", "--out", str(data_path)])
        run(["gen", "--n", "100", "--dims", "5", "--out", str(other_path)])
        run(["queries", "--data", str(other_path), "--count", "3", "--out", str(q_path)])
        assert run(["bench", "--data", str(data_path),
                    "--queries-file", str(q_path), "--repetitions", "1"]) == 1

    def test_sweep_threads(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run(["bench", "--method", "sequential", "--n", "400", "--dims", "2",
                    "--queries", "4", "--repetitions", "1",
                    "--sweep", "threads", "--grid", "1,2", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_unknown_method_is_usage_error(self):
        assert run(["bench", "--method", "btree"]) == 1

    def test_env_var_default_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MDRQ_THREADS", "2")
        jout = tmp_path / "r.jsonl"
        assert run(["bench", "--method", "sequential", "--n", "200", "--dims", "2",
                    "--queries", "3", "--repetitions", "1",
                    "--json-out", str(jout)]) == 0
        import json
        record = json.loads(jout.read_text().splitlines()[0])
        assert record["threads"] == 2


class TestVerify:
    def test_all_methods_pass(self, tmp_path, capsys):
        assert run(["verify", "--n", "2000", "--dims", "4", "--count", "40",
                    "--threads", "2"]) == 0
        out = capsys.readouterr().out
        assert "verification passed" in out

    def test_mismatch_exits_2_and_prints_triple(self, monkeypatch, capsys):
        class Broken:
            name = "broken"

            def search(self, query):
                return ResultSet(np.empty(0, np.int64))

            def search_with_stats(self, query):
                return self.search(query), SearchStats()

            def close(self):
                pass

        real = cli.build_method

        def fake(name, data, **kw):
            if name == "kdtree":
                return Broken()
            return real(name, data, **kw)

        monkeypatch.setattr(cli, "build_method", fake)
        assert run(["verify", "--n", "200", "--dims", "2", "--count", "5",
                    "--method", "kdtree"]) == 2
        out = capsys.readouterr().out
        assert "FAIL (kdtree, query 0" in out

    def test_unknown_method_usage_error(self):
        assert run(["verify", "--method", "nope"]) == 1


class TestReportCmd:
    def test_jsonl_to_csv(self, tmp_path):
        jout = tmp_path / "r.jsonl"
        run(["bench", "--method", "sequential", "--n", "200", "--dims", "2",
             "--queries", "3", "--repetitions", "1", "--json-out", str(jout)])
        out = tmp_path / "r.csv"
        assert run(["report", "--in", str(jout), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 2

    def test_missing_file_exits_1(self, tmp_path):
        assert run(["report", "--in", str(tmp_path / "nope.jsonl"),
                    "--out", str(tmp_path / "o.csv")]) == 1


class TestUsageErrors:
    def test_unknown_flag(self):
        assert run(["gen", "--frobnicate", "--out", "x"]) == 1

    def test_unknown_subcommand(self):
        assert run(["explode"]) == 1

    def test_sweep_without_grid(self):
        assert run(["bench", "--sweep", "threads"]) == 1

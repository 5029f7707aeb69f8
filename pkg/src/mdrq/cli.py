"""Command-line interface.

Subcommands: gen (datasets), queries (query batches), bench (benchmarks and
sweeps), verify (oracle-equivalence audit), report (JSON-lines -> CSV).
Exit codes: 0 success, 1 usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .bench import (
    SWEEP_AXES,
    BenchmarkConfig,
    emit_report,
    materialize,
    physical_cores,
    read_reports_jsonl,
    run_benchmark,
    sweep,
    write_reports_jsonl,
)
from .core import KernelMode, read_dataset, write_dataset
from .methods import METHOD_NAMES, build_method
from .scan import SequentialScan
from .workload import (
    GeneratorSpec,
    gen_dataset,
    gmrqb_dataset,
    load_csv,
    load_templates,
    pair_query_batch,
    read_queries,
    template_query_batch,
    write_queries,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_threads_flag() -> int | None:
    env = os.environ.get("MDRQ_THREADS")
    return int(env) if env else None


def _build_parser() -> _Parser:
    parser = _Parser(prog="mdrq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a dataset file")
    p_gen.add_argument("--kind", choices=["uniform", "clustered", "gmrqb"],
                       default="uniform")
    p_gen.add_argument("--n", type=int, default=100_000)
    p_gen.add_argument("--dims", type=int, default=5)
    p_gen.add_argument("--clusters", type=int, default=5)
    p_gen.add_argument("--cluster-extent", type=float, default=0.1)
    p_gen.add_argument("--csv", help="ingest this CSV instead of generating")
    p_gen.add_argument("--schema",
                       help="comma-separated numeric/categorical labels for --csv")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_q = sub.add_parser("queries", help="generate a query batch file")
    p_q.add_argument("--data", required=True, help="binary dataset file")
    p_q.add_argument("--kind", default="pair",
                     help="pair, mixed, or template:<id>")
    p_q.add_argument("--count", type=int, default=1000)
    p_q.add_argument("--templates-file", help="custom template mapping")
    p_q.add_argument("--seed", type=int, default=0)
    p_q.add_argument("--out", required=True)

    p_b = sub.add_parser("bench", help="run benchmarks or parameter sweeps")
    p_b.add_argument("--method", default="horizontal",
                     help=f"comma-separated subset of {','.join(METHOD_NAMES)}")
    p_b.add_argument("--data", help="binary dataset file (else synthetic)")
    p_b.add_argument("--queries-file", help="JSON-lines query batch")
    p_b.add_argument("--n", type=int, default=100_000)
    p_b.add_argument("--dims", type=int, default=5)
    p_b.add_argument("--clusters", type=int, default=0)
    p_b.add_argument("--queries", type=int, default=1000)
    p_b.add_argument("--query-kind", default="pair")
    p_b.add_argument("--threads", type=int, default=_default_threads_flag())
    p_b.add_argument("--partitions", type=int)
    p_b.add_argument("--kernel", choices=["scalar", "vector"], default="vector")
    p_b.add_argument("--repetitions", type=int, default=3)
    p_b.add_argument("--seed", type=int, default=0)
    p_b.add_argument("--sweep", choices=list(SWEEP_AXES))
    p_b.add_argument("--grid", help="comma-separated sweep values")
    p_b.add_argument("--physical-cores", type=int,
                     help="override the detected physical core count")
    p_b.add_argument("--out", help="CSV report path")
    p_b.add_argument("--json-out", help="JSON-lines report path")

    p_v = sub.add_parser("verify", help="oracle-equivalence audit of all methods")
    p_v.add_argument("--data", help="binary dataset file (else synthetic uniform)")
    p_v.add_argument("--n", type=int, default=10_000)
    p_v.add_argument("--dims", type=int, default=5)
    p_v.add_argument("--method", default="all",
                     help=f"comma-separated subset of {','.join(METHOD_NAMES)} or 'all'")
    p_v.add_argument("--queries-file")
    p_v.add_argument("--count", type=int, default=200)
    p_v.add_argument("--threads", type=int, default=_default_threads_flag())
    p_v.add_argument("--kernel", choices=["scalar", "vector"], default="vector")
    p_v.add_argument("--seed", type=int, default=0)

    p_r = sub.add_parser("report", help="convert JSON-lines reports to CSV")
    p_r.add_argument("--in", dest="infile", required=True)
    p_r.add_argument("--out", required=True)
    return parser


def _cmd_gen(args) -> int:
    if args.csv:
        if not args.schema:
            raise UsageError("--csv requires --schema")
        data = load_csv(args.csv, args.schema.split(","))
    elif args.kind == "gmrqb":
        data = gmrqb_dataset(args.n, args.seed)
    elif args.kind == "clustered":
        data = gen_dataset(GeneratorSpec(
            "clustered", args.n, args.dims, cluster_count=args.clusters,
            cluster_extent=args.cluster_extent, seed=args.seed))
    else:
        data = gen_dataset(GeneratorSpec("uniform", args.n, args.dims, seed=args.seed))
    write_dataset(data, args.out)
    print(f"wrote {data.n} x {data.m} dataset to {args.out}")
    return 0


def _cmd_queries(args) -> int:
    data = read_dataset(args.data)
    if args.kind == "pair":
        queries = pair_query_batch(data, args.count, args.seed)
    else:
        tid = "mixed" if args.kind == "mixed" else args.kind.split(":", 1)[1]
        templates = load_templates(args.templates_file) if args.templates_file else None
        queries = template_query_batch(data, args.count, args.seed, tid, templates)
    write_queries(queries, args.out)
    print(f"wrote {len(queries)} queries to {args.out}")
    return 0


def _parse_methods(spec: str) -> list[str]:
    names = list(METHOD_NAMES) if spec == "all" else [s.strip() for s in spec.split(",")]
    for name in names:
        if name not in METHOD_NAMES:
            raise UsageError(f"unknown method {name!r}")
    return names


def _cmd_bench(args) -> int:
    methods = _parse_methods(args.method)
    if args.threads:
        threads = args.threads
    elif args.physical_cores:
        threads = physical_cores(args.physical_cores)
    else:
        threads = os.cpu_count() or 1
    base = BenchmarkConfig(
        method=methods[0],
        threads=threads,
        partitions=args.partitions,
        kernel=KernelMode.parse(args.kernel),
        repetitions=args.repetitions,
        seed=args.seed,
        n=args.n,
        m=args.dims,
        clusters=args.clusters,
        queries=args.queries,
        query_kind=args.query_kind,
        dataset_path=args.data,
        queries_path=args.queries_file,
    )
    if args.sweep:
        if not args.grid:
            raise UsageError("--sweep requires --grid")
        grid = [float(v) if args.sweep == "selectivity" else int(v)
                for v in args.grid.split(",")]
        reports, warnings = sweep(args.sweep, grid, base, methods=methods)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
    else:
        data, queries = materialize(base)
        reports = [run_benchmark(replace(base, method=name), data, queries)
                   for name in methods]
    for r in reports:
        print(f"{r.method}: n={r.n} m={r.m} t={r.threads} kernel={r.kernel} "
              f"sel={r.avg_selectivity:.4%} qps={r.qps:.1f}")
    if args.out:
        emit_report(reports, args.out)
        print(f"wrote CSV report to {args.out}")
    if args.json_out:
        write_reports_jsonl(reports, args.json_out)
        print(f"wrote JSON report to {args.json_out}")
    return 0


def _cmd_verify(args) -> int:
    if args.data:
        data = read_dataset(args.data)
    else:
        data = gen_dataset(GeneratorSpec("uniform", args.n, args.dims, seed=args.seed))
    if args.queries_file:
        queries = read_queries(args.queries_file)
    else:
        queries = pair_query_batch(data, args.count, args.seed + 1)
    methods = _parse_methods(args.method)
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    mode = KernelMode.parse(args.kernel)
    oracle = SequentialScan(data, KernelMode.SCALAR)
    expected = [oracle.search(q).ids for q in queries]
    failures = 0
    for name in methods:
        method = build_method(name, data, threads=threads, mode=mode, seed=args.seed)
        method_failures = 0
        try:
            for qi, q in enumerate(queries):
                got = method.search(q).ids
                if not np.array_equal(got, expected[qi]):
                    missing = np.setdiff1d(expected[qi], got)
                    extra = np.setdiff1d(got, expected[qi])
                    print(f"FAIL ({name}, query {qi}, "
                          f"missing={missing[:10].tolist()} extra={extra[:10].tolist()})")
                    method_failures += 1
        finally:
            method.close()
        failures += method_failures
        print(f"{name}: {'ok' if method_failures == 0 else 'MISMATCH'} "
              f"({len(queries)} queries)")
    if failures:
        print(f"verification failed: {failures} mismatching result sets")
        return 2
    print("verification passed: all methods match the sequential scalar oracle")
    return 0


def _cmd_report(args) -> int:
    reports = read_reports_jsonl(args.infile)
    emit_report(reports, args.out)
    print(f"wrote CSV report to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "gen": _cmd_gen,
            "queries": _cmd_queries,
            "bench": _cmd_bench,
            "verify": _cmd_verify,
            "report": _cmd_report,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

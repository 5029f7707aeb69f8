"""Benchmark harness: warmup, timed query batches, throughput, sweeps.

Throughput is one wall-clock interval around the whole batch divided into
the query count, never a sum of per-query timers. Reported selectivity
always comes from the oracle on a query sample, independent of the method
under test.
"""

from __future__ import annotations

import csv
import json
import resource
import statistics
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import psutil

from . import kernels
from .core import DataSet, KernelMode, read_dataset, selectivity_oracle
from .methods import build_method
from .workload import (
    GeneratorSpec,
    gen_dataset,
    gen_query_from_pair,
    gmrqb_dataset,
    pair_query_batch,
    read_queries,
    template_query_batch,
)

REPORT_COLUMNS = (
    "method", "n", "m", "threads", "partitions", "kernel", "clusters",
    "avg_selectivity", "queries", "seconds", "qps",
    "objects_compared", "nodes_visited",
)

SWEEP_AXES = ("selectivity", "dimensionality", "dataset_size", "clusters", "threads")


def physical_cores(override: int | None = None) -> int:
    if override is not None:
        if override < 1:
            raise ValueError("physical core override must be at least 1")
        return override
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


@dataclass(frozen=True)
class BenchmarkConfig:
    method: str = "horizontal"
    threads: int = 1
    partitions: int | None = None  # defaults to threads
    kernel: KernelMode = KernelMode.VECTORIZED
    repetitions: int = 3
    seed: int = 0
    # synthetic workload parameters (ignored when paths are given)
    n: int = 100_000
    m: int = 5
    clusters: int = 0  # 0 = uniform, >0 = clustered
    cluster_extent: float = 0.1
    queries: int = 1000
    query_kind: str = "pair"  # "pair" | "template:<id>" | "mixed" | "gmrqb"
    dataset_path: str | None = None
    queries_path: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.threads < 1:
            raise ValueError("thread count must be at least 1")


@dataclass
class BenchmarkReport:
    method: str
    n: int
    m: int
    threads: int
    partitions: int
    kernel: str
    clusters: int
    avg_selectivity: float
    selectivity_sigma: float
    queries: int
    build_seconds: float
    seconds: float
    qps: float
    objects_compared: int
    nodes_visited: int
    result_total: int
    peak_rss_kb: int
    repetitions: int
    seed: int
    backend: str = field(default_factory=lambda: kernels.BACKEND)

    def to_row(self) -> list[str]:
        def fmt(v):
            if isinstance(v, float):
                return f"{v:.6g}"
            return str(v)
        return [fmt(getattr(self, c)) for c in REPORT_COLUMNS]


def materialize(config: BenchmarkConfig):
    """Resolve a config into (dataset, query batch)."""
    kind = config.query_kind
    template_shaped = kind == "mixed" or kind.startswith("template:")
    if config.dataset_path:
        data = read_dataset(config.dataset_path)
    elif template_shaped or kind == "gmrqb":
        data = gmrqb_dataset(config.n, config.seed)
    elif config.clusters > 0:
        data = gen_dataset(GeneratorSpec(
            "clustered", config.n, config.m, cluster_count=config.clusters,
            cluster_extent=config.cluster_extent, seed=config.seed))
    else:
        data = gen_dataset(GeneratorSpec("uniform", config.n, config.m, seed=config.seed))

    if config.queries_path:
        queries = read_queries(config.queries_path)
    elif kind in ("pair", "gmrqb"):
        queries = pair_query_batch(data, config.queries, config.seed + 1)
    elif kind == "mixed":
        queries = template_query_batch(data, config.queries, config.seed + 1, "mixed")
    elif template_shaped:
        tid = kind.split(":", 1)[1]
        queries = template_query_batch(data, config.queries, config.seed + 1, tid)
    else:
        raise ValueError(f"unknown query kind {kind!r}")
    return data, queries


def _oracle_sample(data: DataSet, queries, cap: int = 64):
    if not queries:
        return 0.0, 0.0
    idx = np.unique(np.linspace(0, len(queries) - 1, min(cap, len(queries))).astype(int))
    sels = [selectivity_oracle(data, queries[i]).joint for i in idx]
    mean = float(np.mean(sels))
    sigma = float(np.std(sels))
    return mean, sigma


def run_benchmark(config: BenchmarkConfig, data: DataSet | None = None,
                  queries=None, *, clock=time.perf_counter) -> BenchmarkReport:
    """Build, warm up with one untimed batch, then time `repetitions` runs.

    The reported batch time is the median timed run. Result cardinalities
    are accumulated so no search can be optimized away.
    """
    if data is None or queries is None:
        mat_data, mat_queries = materialize(config)
        data = data if data is not None else mat_data
        queries = queries if queries is not None else mat_queries
    if queries and queries[0].m != data.m:
        raise ValueError(
            f"query dimensionality {queries[0].m} does not match dataset m={data.m}")

    t0 = clock()
    method = build_method(
        config.method, data, threads=config.threads, partitions=config.partitions,
        mode=config.kernel, seed=config.seed)
    build_seconds = clock() - t0

    try:
        # warmup: full batch once, untimed; counters collected here
        objects_compared = 0
        nodes_visited = 0
        result_total = 0
        for q in queries:
            result, stats = method.search_with_stats(q)
            objects_compared += stats.objects_compared
            nodes_visited += stats.nodes_visited
            result_total += len(result)

        times = []
        for _ in range(config.repetitions):
            start = clock()
            acc = 0
            for q in queries:
                acc += len(method.search(q))
            times.append(clock() - start)
            if acc != result_total:
                raise RuntimeError("timed run returned a different result total")
    finally:
        method.close()

    seconds = statistics.median(times)
    sel_mean, sel_sigma = _oracle_sample(data, queries)
    return BenchmarkReport(
        method=config.method,
        n=data.n,
        m=data.m,
        threads=config.threads,
        partitions=config.partitions if config.partitions is not None else config.threads,
        kernel=config.kernel.value,
        clusters=config.clusters,
        avg_selectivity=sel_mean,
        selectivity_sigma=sel_sigma,
        queries=len(queries),
        build_seconds=build_seconds,
        seconds=seconds,
        qps=len(queries) / seconds if seconds > 0 else float("inf"),
        objects_compared=objects_compared,
        nodes_visited=nodes_visited,
        result_total=result_total,
        peak_rss_kb=resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        repetitions=config.repetitions,
        seed=config.seed,
    )


def collect_selectivity_buckets(data: DataSet, buckets, per_bucket: int, seed,
                                *, estimate_rows: int = 100_000,
                                max_draws: int = 300_000):
    """Pair-generated queries binned by exact oracle selectivity.

    buckets is a list of (lo, hi) selectivity intervals. A cheap subsample
    estimate prefilters candidates; assignment always uses the exact oracle
    on the full dataset. Returns one query list per bucket (may fall short
    of per_bucket if the distribution is too thin within max_draws).
    """
    rng = np.random.default_rng(seed)
    if data.n > estimate_rows:
        idx = rng.choice(data.n, size=estimate_rows, replace=False)
        sample_values = np.ascontiguousarray(data.values[idx])
    else:
        sample_values = data.values
    sample_n = max(1, sample_values.shape[0])
    out = [[] for _ in buckets]
    for _ in range(max_draws):
        if all(len(qs) >= per_bucket for qs in out):
            break
        q = gen_query_from_pair(data, rng)
        ids, _, _ = kernels.scan_rows(
            sample_values, q.lower, q.upper, kernels.MODE_SCALAR)
        est = ids.size / sample_n
        wanted = [
            b for b, (lo, hi) in enumerate(buckets)
            if len(out[b]) < per_bucket and lo * 0.3 <= est <= hi * 3.0
        ]
        if not wanted:
            continue
        exact = selectivity_oracle(data, q).joint
        for b in wanted:
            lo, hi = buckets[b]
            if lo <= exact <= hi:
                out[b].append(q)
                break
    return out


def sweep(axis: str, grid, base: BenchmarkConfig, *, methods=None,
          clock=time.perf_counter):
    """One report per grid point per method; infeasible points are skipped.

    Returns (reports, warnings). The selectivity axis bins pair-generated
    queries by oracle selectivity around each grid value; other axes
    regenerate data/queries per point.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r} (choose from {SWEEP_AXES})")
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    methods = list(methods) if methods else [base.method]
    reports = []
    warnings = []

    if axis == "selectivity":
        data, _ = materialize(base)
        edges = []
        for v in grid:
            if not 0.0 < v < 1.0:
                warnings.append(f"selectivity {v} infeasible; skipped")
                edges.append(None)
            else:
                edges.append((v / 3.0, min(1.0, v * 3.0)))
        buckets = [e for e in edges if e is not None]
        filled = collect_selectivity_buckets(
            data, buckets, base.queries, base.seed + 17)
        it = iter(filled)
        for v, edge in zip(grid, edges):
            if edge is None:
                continue
            queries = next(it)
            if not queries:
                warnings.append(f"no pair queries found near selectivity {v}; skipped")
                continue
            for name in methods:
                cfg = replace(base, method=name)
                reports.append(run_benchmark(cfg, data, queries, clock=clock))
        return reports, warnings

    for v in grid:
        try:
            if axis == "threads":
                cfg = replace(base, threads=int(v))
            elif axis == "dimensionality":
                cfg = replace(base, m=int(v))
            elif axis == "dataset_size":
                cfg = replace(base, n=int(v))
            else:
                cfg = replace(base, clusters=int(v))
            data, queries = materialize(cfg)
        except ValueError as exc:
            warnings.append(f"{axis}={v} infeasible: {exc}; skipped")
            continue
        for name in methods:
            reports.append(run_benchmark(replace(cfg, method=name), data, queries,
                                         clock=clock))
    return reports, warnings


def emit_report(reports, path) -> None:
    """Plot-ready CSV, one row per report, stable column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(report.to_row())


def write_reports_jsonl(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(asdict(report)) + "\n")


def read_reports_jsonl(path) -> list[BenchmarkReport]:
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                reports.append(BenchmarkReport(**json.loads(line)))
    return reports

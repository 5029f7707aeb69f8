"""Compare the compiled kernels against the pure-Python fallback.

Runs the hot kernels of the engine on identical inputs through both
backends and prints per-kernel timings plus an end-to-end query benchmark.
The pure-Python numbers motivate why the compiled extension exists; the
fallback is correctness insurance, not a performance path.

Usage: python benchmarks/kernel_backends.py [--n 200000] [--m 5] [--queries 20]
"""

import argparse
import time

import numpy as np

from mdrq import _kernels_py
from mdrq.workload import GeneratorSpec, gen_dataset, pair_query_batch

try:
    from mdrq import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats=3):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernel(name, make_call, backends):
    row = {"kernel": name}
    for label, backend in backends.items():
        row[label] = timeit(make_call(backend))
    return row


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--m", type=int, default=5)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = {"python": _kernels_py}
    if _kernels_cy is not None:
        backends["compiled"] = _kernels_cy

    data = gen_dataset(GeneratorSpec("uniform", args.n, args.m, seed=args.seed))
    queries = pair_query_batch(data, args.queries, args.seed + 1)
    q = queries[0]
    col = data.column(0)
    left = np.empty(args.n, np.int32)
    right = np.empty(args.n, np.int32)

    rows = [
        bench_kernel(
            f"scan_rows {args.n}x{args.m} (scalar)",
            lambda b: lambda: b.scan_rows(data.values, q.lower, q.upper, b.MODE_SCALAR),
            backends),
        bench_kernel(
            f"scan_rows {args.n}x{args.m} (blocked)",
            lambda b: lambda: b.scan_rows(data.values, q.lower, q.upper, b.MODE_BLOCKED),
            backends),
        bench_kernel(
            f"scan_column n={args.n}",
            lambda b: lambda: b.scan_column(col, q.lower[0], q.upper[0], b.MODE_BLOCKED),
            backends),
        bench_kernel(
            f"kd_build n={args.n}",
            lambda b: lambda: b.kd_build(data.values, left, right),
            backends),
    ]
    depth = backends[list(backends)[-1]].kd_build(data.values, left, right)
    rows.append(bench_kernel(
        f"kd_search n={args.n}",
        lambda b: lambda: b.kd_search(
            data.values, left, right, q.lower, q.upper, b.MODE_BLOCKED, depth),
        backends))

    labels = list(backends)
    width = max(len(r["kernel"]) for r in rows) + 2
    header = "kernel".ljust(width) + "".join(f"{l:>14}" for l in labels)
    if len(labels) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for r in rows:
        line = r["kernel"].ljust(width)
        line += "".join(f"{r[l] * 1000:>12.2f}ms" for l in labels)
        if len(labels) == 2:
            line += f"{r['python'] / r['compiled']:>9.0f}x"
        print(line)

    if _kernels_cy is None:
        print("\ncompiled extension not built; only the fallback was measured")


if __name__ == "__main__":
    main()

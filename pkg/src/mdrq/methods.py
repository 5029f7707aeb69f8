"""Uniform access-method registry.

Every method exposes search(query) -> ResultSet and search_with_stats.
Index structures are wrapped per partition (one instance each), matching
how the scans parallelize.
"""

from __future__ import annotations

from .core import DataSet, KernelMode
from .kdtree import KdTree
from .parallel import build_partitioned, default_threads, make_layout
from .rstar import RStarConfig, RStarTree
from .scan import HorizontalScan, SequentialScan, VerticalScan
from .vafile import VaFile

METHOD_NAMES = ("sequential", "horizontal", "vertical", "kdtree", "rstar", "vafile")


def build_method(name: str, data: DataSet, *, threads: int | None = None,
                 partitions: int | None = None, mode: KernelMode = KernelMode.SCALAR,
                 seed: int = 0, rstar_config: RStarConfig | None = None):
    """Build one access method over a dataset.

    threads defaults to the machine's worker count, partitions to threads
    (one index instance, scan block, or worker per partition).
    """
    t = threads if threads is not None else default_threads()
    p = partitions if partitions is not None else t
    if name == "sequential":
        return SequentialScan(data, mode)
    if name == "horizontal":
        return HorizontalScan(data, make_layout(data.n, p, seed), mode=mode, threads=t)
    if name == "vertical":
        return VerticalScan(data, threads=t, mode=mode)
    if name == "kdtree":
        factory = lambda objs, ids, s: KdTree.build(objs, ids, s, mode=mode)
    elif name == "rstar":
        factory = lambda objs, ids, s: RStarTree.build(
            objs, ids, s, mode=mode, config=rstar_config)
    elif name == "vafile":
        factory = lambda objs, ids, s: VaFile.build(objs, ids, s, mode=mode)
    else:
        raise ValueError(f"unknown access method {name!r} (choose from {METHOD_NAMES})")
    index = build_partitioned(factory, data, make_layout(data.n, p, seed),
                              threads=t, name=name, seed=seed)
    return index

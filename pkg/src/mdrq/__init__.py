"""In-memory multidimensional range query engine.

Five ways to answer the same inclusive per-dimension interval query over a
float32 point collection: a sequential scan, parallel scans over horizontal
and vertical partitions, a kd-tree, an R*-tree, and a VA-file, plus
generators, a selectivity oracle, and a benchmark harness. The hot kernels
live in a compiled extension with a pure-Python fallback selected at import
(see mdrq.kernels.BACKEND).
"""

from .bench import (
    BenchmarkConfig,
    BenchmarkReport,
    emit_report,
    physical_cores,
    run_benchmark,
    sweep,
)
from .core import (
    DataSet,
    KernelMode,
    RangeQuery,
    ResultSet,
    SearchStats,
    SelectivityStats,
    match_scalar,
    match_vectorized,
    read_dataset,
    selectivity_oracle,
    write_dataset,
)
from .kdtree import KdTree
from .kernels import BACKEND
from .methods import METHOD_NAMES, build_method
from .parallel import (
    ExecutorConfig,
    PartitionLayout,
    PartitionedIndex,
    build_partitioned,
    make_layout,
    search_partitioned,
)
from .rstar import Mbr, RStarConfig, RStarTree, mbr_intersects
from .scan import (
    ColumnSet,
    HorizontalScan,
    SequentialScan,
    VerticalScan,
    horizontal_scan,
    sequential_scan,
    vertical_scan,
)
from .vafile import VaFile, VaGrid
from .workload import (
    GeneratorSpec,
    QueryTemplate,
    gen_clustered,
    gen_dataset,
    gen_query_from_pair,
    gen_uniform,
    gmrqb_dataset,
    instantiate_template,
    load_csv,
    load_templates,
    pair_query_batch,
    template_query_batch,
)

__version__ = "0.1.0"

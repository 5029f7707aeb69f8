"""Synthetic data generators, query generators, and CSV ingestion.

Uniform and clustered generators cover the synthetic experiments; a
19-column genomic-variation-shaped generator stands in for the real
benchmark dataset. Queries come either from random object pairs
(complete-match, varying selectivity) or from the eight parameterized
templates shipped in data/gmrqb_templates.cfg (mostly partial-match).
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import DataSet, RangeQuery

HASH_DOMAIN = 1 << 24  # categorical hashes fold into [0, 2^24), exact in float32


def hash_category(label: str) -> float:
    """Deterministic 64-bit string hash folded to a float32-exact real."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return float(int.from_bytes(digest, "little") % HASH_DOMAIN)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str  # "uniform" | "clustered"
    n: int
    m: int
    cluster_count: int = 1
    cluster_extent: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform", "clustered"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 0 or self.m < 1:
            raise ValueError("need n >= 0 and m >= 1")
        if self.kind == "clustered":
            if self.cluster_count < 1:
                raise ValueError("cluster_count must be at least 1")
            if not 0.0 < self.cluster_extent <= 1.0:
                raise ValueError("cluster_extent must be in (0, 1]")


def gen_uniform(spec: GeneratorSpec) -> DataSet:
    """n*m independent float32 draws from [0, 1), seeded."""
    if spec.kind != "uniform":
        raise ValueError("spec.kind must be 'uniform'")
    rng = np.random.default_rng(spec.seed)
    values = rng.random((spec.n, spec.m), dtype=np.float32)
    return DataSet(values)


def cluster_boxes(spec: GeneratorSpec) -> np.ndarray:
    """The (cluster_count, m, 2) float32 boxes gen_clustered draws within.

    Cluster centers sit along the main diagonal of the unit cube with
    per-dimension jitter of one extent. The cross-dimension correlation is
    what makes a query box spanning two clusters sweep up the clusters
    between them, so the matched fraction of pair-generated queries grows
    with the cluster count; independently scattered centers keep it flat
    near the uniform-data level no matter how many clusters there are.
    Centers are clamped so every box keeps its full side length inside
    [0, 1]; extent 1.0 therefore degenerates to the uniform generator.
    """
    box_seed, _ = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(box_seed)
    diag = rng.random(spec.cluster_count)
    jitter = (rng.random((spec.cluster_count, spec.m)) - 0.5) * spec.cluster_extent
    half = spec.cluster_extent / 2.0
    centers = np.clip(diag[:, None] + jitter, half, 1.0 - half)
    boxes = np.empty((spec.cluster_count, spec.m, 2), dtype=np.float32)
    boxes[:, :, 0] = (centers - half).astype(np.float32)
    boxes[:, :, 1] = (centers + half).astype(np.float32)
    return boxes


def gen_clustered(spec: GeneratorSpec) -> DataSet:
    """Axis-aligned cluster boxes with uniform interiors, round-robin filled."""
    if spec.kind != "clustered":
        raise ValueError("spec.kind must be 'clustered'")
    _, value_seed = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(value_seed)
    boxes = cluster_boxes(spec)
    assign = np.arange(spec.n, dtype=np.int64) % spec.cluster_count
    low = boxes[assign, :, 0].astype(np.float64)
    high = boxes[assign, :, 1].astype(np.float64)
    u = rng.random((spec.n, spec.m))
    values = (low + u * (high - low)).astype(np.float32)
    # float32 rounding must not push a value outside its declared box
    np.clip(values, boxes[assign, :, 0], boxes[assign, :, 1], out=values)
    return DataSet(values)


def gen_dataset(spec: GeneratorSpec) -> DataSet:
    return gen_uniform(spec) if spec.kind == "uniform" else gen_clustered(spec)


def gen_query_from_pair(data: DataSet, seed) -> RangeQuery:
    """Complete-match query from two random objects: per-dim min/max bounds."""
    if data.n < 2:
        raise ValueError("pair query generation needs at least 2 objects")
    rng = _as_rng(seed)
    i, j = rng.choice(data.n, size=2, replace=False)
    a = data.values[i]
    b = data.values[j]
    return RangeQuery(np.minimum(a, b), np.maximum(a, b))


def pair_query_batch(data: DataSet, count: int, seed) -> list[RangeQuery]:
    rng = _as_rng(seed)
    return [gen_query_from_pair(data, rng) for _ in range(count)]


# -- GMRQB-shaped dataset and templates -------------------------------------

# The 19 attribute columns of the genomic-variation-shaped dataset. Kinds:
# integer and float columns are numeric (range predicates make sense),
# categorical columns store deterministic label hashes (point predicates).
GMRQB_COLUMNS = (
    ("chromosome", "int", 1, 23),
    ("location", "int", 1, 250_000_000),
    ("quality", "float", 0.0, 100.0),
    ("depth", "int", 1, 1000),
    ("reference_genome", "cat", 3, None),
    ("variation_id", "int", 1, 100_000_000),
    ("allele_freq", "float", 0.0, 1.0),
    ("allele_count", "int", 0, 5008),
    ("ref_base", "cat", 4, None),
    ("alt_base", "cat", 4, None),
    ("ancestral_allele", "cat", 5, None),
    ("variant_type", "cat", 5, None),
    ("sample_id", "int", 1, 2504),
    ("gender", "cat", 2, None),
    ("family_id", "int", 1, 1800),
    ("population", "cat", 26, None),
    ("relationship", "cat", 12, None),
    ("genotype", "cat", 3, None),
    ("filter_status", "cat", 3, None),
)

GMRQB_DIMS = len(GMRQB_COLUMNS)
GMRQB_COLUMN_INDEX = {name: i for i, (name, _, _, _) in enumerate(GMRQB_COLUMNS)}


def gmrqb_dataset(n: int, seed: int = 0) -> DataSet:
    """Synthetic 19-dimensional stand-in with per-column cardinalities."""
    rng = np.random.default_rng(seed)
    values = np.empty((n, GMRQB_DIMS), dtype=np.float32)
    for j, (name, kind, a, b) in enumerate(GMRQB_COLUMNS):
        if kind == "int":
            values[:, j] = rng.integers(a, b + 1, size=n).astype(np.float32)
        elif kind == "float":
            values[:, j] = (a + rng.random(n) * (b - a)).astype(np.float32)
        else:
            table = np.array(
                [hash_category(f"{name}_{k}") for k in range(a)], dtype=np.float32)
            values[:, j] = table[rng.integers(0, a, size=n)]
    return DataSet(values)


@dataclass(frozen=True)
class QueryTemplate:
    """A parameterized query shape: which dimensions, point or range each.

    Selectivity targets are metadata describing the workload this template
    models; instantiation draws bounds from the data and does not enforce
    them.
    """

    template_id: int
    dims: tuple[int, ...]
    styles: tuple[str, ...]  # "point" | "range", parallel to dims
    target_selectivity: float  # fraction
    selectivity_sigma: float

    @property
    def queried_count(self) -> int:
        return len(self.dims)


_TEMPLATE_LINE = re.compile(
    r"template\s+(\d+)\s*\|\s*selectivity\s+([0-9.eE+-]+)\s+sigma\s+([0-9.eE+-]+)\s*\|\s*(.+)")


def parse_templates(text: str, column_index: dict[str, int] | None = None) -> dict[int, QueryTemplate]:
    """Parse the plain-text template mapping (see data/gmrqb_templates.cfg)."""
    columns = column_index if column_index is not None else GMRQB_COLUMN_INDEX
    templates: dict[int, QueryTemplate] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = _TEMPLATE_LINE.fullmatch(line)
        if not match:
            raise ValueError(f"line {lineno}: cannot parse template definition")
        tid = int(match.group(1))
        sel = float(match.group(2)) / 100.0
        sigma = float(match.group(3)) / 100.0
        dims = []
        styles = []
        for token in match.group(4).split():
            name, _, style = token.partition(":")
            if style not in ("point", "range"):
                raise ValueError(f"line {lineno}: bad predicate style in {token!r}")
            dim = int(name) if name.isdigit() else columns.get(name, -1)
            if dim < 0:
                raise ValueError(f"line {lineno}: unknown column {name!r}")
            dims.append(dim)
            styles.append(style)
        if len(set(dims)) != len(dims):
            raise ValueError(f"line {lineno}: duplicate dimension in template {tid}")
        templates[tid] = QueryTemplate(tid, tuple(dims), tuple(styles), sel, sigma)
    if not templates:
        raise ValueError("no templates found")
    return templates


def load_templates(path=None) -> dict[int, QueryTemplate]:
    if path is None:
        text = resources.files("mdrq").joinpath("data/gmrqb_templates.cfg").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_templates(text)


def instantiate_template(template: QueryTemplate, data: DataSet, seed) -> RangeQuery:
    """Draw per-dimension bounds from values present in the data.

    Point style samples one stored value (lb = ub); range style takes the
    min/max of two sampled values. Unqueried dimensions keep sentinels.
    """
    if data.n < 1:
        raise ValueError("template instantiation needs a non-empty dataset")
    rng = _as_rng(seed)
    predicates = {}
    for dim, style in zip(template.dims, template.styles):
        if dim >= data.m:
            raise ValueError(
                f"template {template.template_id} references dimension {dim}, "
                f"data has only {data.m}")
        col = data.values[:, dim]
        if style == "point":
            v = float(col[rng.integers(data.n)])
            predicates[dim] = (v, v)
        else:
            a = float(col[rng.integers(data.n)])
            b = float(col[rng.integers(data.n)])
            predicates[dim] = (min(a, b), max(a, b))
    return RangeQuery.from_predicates(data.m, predicates)


def template_query_batch(data: DataSet, count: int, seed, template_id,
                         templates: dict[int, QueryTemplate] | None = None) -> list[RangeQuery]:
    """Instances of one template, or of all templates cycled when 'mixed'."""
    templates = templates or load_templates()
    rng = _as_rng(seed)
    if template_id == "mixed":
        ids = sorted(templates)
        chosen = [ids[i % len(ids)] for i in range(count)]
        rng.shuffle(chosen)
    else:
        tid = int(template_id)
        if tid not in templates:
            raise ValueError(f"unknown template id {tid}")
        chosen = [tid] * count
    return [instantiate_template(templates[t], data, rng) for t in chosen]


# -- CSV ingestion -----------------------------------------------------------

_NUMERIC_TOKENS = ("numeric", "num", "n", "float", "real")
_CATEGORICAL_TOKENS = ("categorical", "cat", "c", "str", "string")


def _schema_is_numeric(token: str, position: int) -> bool:
    t = token.strip().lower()
    if t in _NUMERIC_TOKENS:
        return True
    if t in _CATEGORICAL_TOKENS:
        return False
    raise ValueError(f"schema column {position}: unknown kind {token!r}")


def load_csv(path, schema) -> DataSet:
    """Ingest a CSV with a header row into a float32 dataset.

    schema labels each column 'numeric' or 'categorical'; categorical cells
    are folded through a deterministic string hash so equal labels always map
    to the same real value.
    """
    numeric = [_schema_is_numeric(tok, i) for i, tok in enumerate(schema)]
    m = len(numeric)
    if m < 1:
        raise ValueError("schema must describe at least one column")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and len(header) != m:
            raise ValueError(
                f"header has {len(header)} columns, schema describes {m}")
        for rowno, record in enumerate(reader, 1):
            if len(record) != m:
                raise ValueError(
                    f"data row {rowno}: {len(record)} fields, expected {m}")
            out = np.empty(m, dtype=np.float32)
            for j, cell in enumerate(record):
                if numeric[j]:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ValueError(
                            f"data row {rowno}: cannot parse {cell!r} "
                            f"as a number in column {j}") from None
                    if np.isnan(value):
                        raise ValueError(f"data row {rowno}: NaN in column {j}")
                    out[j] = value
                else:
                    out[j] = hash_category(cell)
            rows.append(out)
    values = np.vstack(rows) if rows else np.empty((0, m), dtype=np.float32)
    return DataSet(values)


# -- query batch serialization (JSON lines) ----------------------------------

def write_queries(queries, path) -> None:
    """One JSON object per line; nulls encode the infinity sentinels."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            lower = [None if v == -np.inf else float(v) for v in q.lower]
            upper = [None if v == np.inf else float(v) for v in q.upper]
            fh.write(json.dumps({"lower": lower, "upper": upper}) + "\n")


def read_queries(path) -> list[RangeQuery]:
    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                lower = [(-np.inf if v is None else v) for v in obj["lower"]]
                upper = [(np.inf if v is None else v) for v in obj["upper"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad query record: {exc}") from None
            queries.append(RangeQuery(lower, upper))
    return queries

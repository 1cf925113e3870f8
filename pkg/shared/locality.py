"""
Charts, tree-likeness statistics and the template-sparsification experiment.

A chart is the signed rooted radius-r neighborhood of a variable together with
its VV labels (a_i, b); two charts are equal iff their canonical codes and
labels are equal. Graph construction and canonical codes live in
`shared.factor_graph` and are re-exported here.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
import structlog
from pydantic import BaseModel

from .ensemble import (
    EnsembleParams,
    Instance,
    Mask,
    apply_mask,
    sample_base_cnf,
    sample_blocks,
)
from .factor_graph import (
    FactorGraph,
    SignedRootedPattern,
    build_factor_graph,
    canonical_code,
    dump_pattern,
    extract_neighborhood,
)
from .gf2 import BitVector, column
from .hashing import Rng, sample_parity_matrix, sample_rhs
from .parallel import ordered_map
from .sils import SilsSpec, extract_sils
from .symmetry import bias_table

logger = structlog.get_logger().bind(component="locality")

SPARSIFY_MIN_GROUP = 500

__all__ = [
    "FactorGraph",
    "SignedRootedPattern",
    "build_factor_graph",
    "extract_neighborhood",
    "canonical_code",
    "dump_pattern",
    "ChartKey",
    "tree_likeness_experiment",
    "tree_likeness_trend",
    "sparsification_experiment",
    "sign_marginals_by_shape",
]


@dataclass(frozen=True)
class ChartKey:
    """(canonical code, a_i, b)."""

    canonical_code: bytes
    a_i: BitVector
    b: BitVector

    @classmethod
    def from_block(
        cls, inst: Instance, i: int, r: int, graph: Optional[FactorGraph] = None
    ) -> "ChartKey":
        G = graph or build_factor_graph(inst.signed_cnf)
        pattern = extract_neighborhood(G, i, r)
        return cls(canonical_code(pattern), column(inst.vv.A, i), inst.vv.b)

    def pattern_only(self) -> bytes:
        return self.canonical_code

    def hex(self) -> str:
        return f"{self.canonical_code.hex()}:{self.a_i.length}:{self.a_i.hex() or '-'}:{self.b.hex() or '-'}"


class TreeRow(BaseModel):
    m: int
    k: int
    alpha: float
    radius: int
    n: int
    tree_fraction: float
    max_pattern_frequency: float
    max_chart_frequency: float
    distinct_patterns: int
    distinct_charts: int
    most_common_pattern: str


class TreeReport(BaseModel):
    radius: int
    rows: List[TreeRow]
    tree_fraction_increases: bool
    chart_frequency_ratio: Optional[float]
    chart_frequency_drops: bool
    passed: bool


def _tree_sample(job: Tuple[EnsembleParams, int, Rng]) -> Tuple[bool, bytes, str]:
    params, r, rng = job
    F = sample_base_cnf(params, rng)
    signed = apply_mask(F, Mask.sample(params.m, rng))
    k = params.fixed_k
    A = sample_parity_matrix(k, params.m, rng)
    b = sample_rhs(k, params.b_mode, rng, params.delta)
    i = rng.integer(0, params.m)
    G = build_factor_graph(signed)
    pattern = extract_neighborhood(G, i, r)
    key = ChartKey(canonical_code(pattern), column(A, i), b)
    return pattern.is_tree, key.canonical_code, key.hex()


def tree_likeness_experiment(
    params: EnsembleParams, r: int, n: int, rng: Rng, workers: int = 1
) -> TreeRow:
    """Tree fraction and maximal chart frequencies of nbr_r(Phi, uniform i).

    Samples the masked base CNF with a fresh XOR layer at the fixed k, without
    conditioning on uniqueness.
    """
    if r < 0:
        raise ValueError(f"Radius must be non-negative, got {r}")
    jobs = [(params, r, rng.substream("treelike", params.m, j)) for j in range(n)]
    results = ordered_map(_tree_sample, jobs, workers)
    trees = sum(1 for is_tree, _, _ in results if is_tree)
    patterns = Counter(code for _, code, _ in results)
    charts = Counter(chart for _, _, chart in results)
    top_pattern, top_count = patterns.most_common(1)[0] if patterns else (b"", 0)
    row = TreeRow(
        m=params.m,
        k=params.fixed_k,
        alpha=params.alpha,
        radius=r,
        n=n,
        tree_fraction=trees / n if n else 1.0,
        max_pattern_frequency=top_count / n if n else 0.0,
        max_chart_frequency=(charts.most_common(1)[0][1] / n) if n else 0.0,
        distinct_patterns=len(patterns),
        distinct_charts=len(charts),
        most_common_pattern=top_pattern.hex(),
    )
    logger.info("Tree-likeness measured", m=params.m, r=r, n=n, tree_fraction=row.tree_fraction)
    return row


def tree_likeness_trend(
    params: EnsembleParams,
    m_values: Sequence[int],
    r: int,
    n: int,
    rng: Rng,
    workers: int = 1,
) -> TreeReport:
    """Tree-likeness at each m; checks the growth of the tree fraction and the chart-frequency drop."""
    rows = [
        tree_likeness_experiment(params.model_copy(update={"m": m}), r, n, rng, workers)
        for m in m_values
    ]
    increases = len(rows) >= 2 and rows[-1].tree_fraction > rows[0].tree_fraction
    ratio = None
    if len(rows) >= 2 and rows[-1].max_chart_frequency > 0:
        ratio = rows[0].max_chart_frequency / rows[-1].max_chart_frequency
    drops = ratio is not None and ratio >= 2.0
    return TreeReport(
        radius=r,
        rows=rows,
        tree_fraction_increases=increases,
        chart_frequency_ratio=ratio,
        chart_frequency_drops=drops,
        passed=increases and drops,
    )


class GroupRow(BaseModel):
    bit: int
    group: str
    count: int
    p_hat: float
    bias: float
    band: float
    flagged: bool


class GroupTable(BaseModel):
    keyed_by: str
    min_group: int
    groups: List[GroupRow]
    flagged: int
    small_group_mass: float


class SparsifyReport(BaseModel):
    m: int
    n_blocks: int
    radius: int
    u_groups: GroupTable
    chart_groups: GroupTable
    passed: bool


def _group_table(records: pd.DataFrame, keyed_by: str, min_group: int) -> GroupTable:
    grouped = bias_table(records, ["bit", "group"], min_group)
    small = grouped.loc[grouped["count"] < min_group, "count"].sum()
    large = grouped[grouped["count"] >= min_group]
    rows = [
        GroupRow(
            bit=int(row.bit),
            group=str(row.group),
            count=int(row.count),
            p_hat=float(row.p_hat),
            bias=abs(float(row.p_hat) - 0.5),
            band=float(row.band),
            flagged=bool(row.flagged),
        )
        for row in large.itertuples(index=False)
    ]
    return GroupTable(
        keyed_by=keyed_by,
        min_group=min_group,
        groups=rows,
        flagged=int(large["flagged"].sum()),
        small_group_mass=float(small / max(len(records), 1)),
    )


def sparsification_records(
    instances: Sequence[Instance], witnesses: Sequence[BitVector], r: int, spec: SilsSpec, rng: Rng
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """u-group rows for every bit and chart rows for one uniform bit per block."""
    u_rows: Dict[str, list] = {"bit": [], "group": [], "x": []}
    chart_rows: Dict[str, list] = {"bit": [], "group": [], "x": []}
    for j, (inst, x) in enumerate(zip(instances, witnesses)):
        z = extract_sils(inst.signed_cnf, spec).hex() or "-"
        b = inst.vv.b.hex() or "-"
        for i in range(inst.m):
            a_i = column(inst.vv.A, i)
            u_rows["bit"].append(i)
            u_rows["group"].append(f"{z}:{a_i.length}:{a_i.hex() or '-'}:{b}")
            u_rows["x"].append(x[i])
        i = rng.substream("chart-root", j).integer(0, inst.m)
        chart_rows["bit"].append(i)
        chart_rows["group"].append(ChartKey.from_block(inst, i, r).hex())
        chart_rows["x"].append(x[i])
    return pd.DataFrame(u_rows), pd.DataFrame(chart_rows)


def sparsification_experiment(
    params: EnsembleParams,
    r: int,
    n: int,
    rng: Rng,
    spec: Optional[SilsSpec] = None,
    min_group: int = SPARSIFY_MIN_GROUP,
    workers: int = 1,
) -> SparsifyReport:
    """Conditional bias of X_i within local-input groups and within chart groups."""
    spec = spec or SilsSpec()
    blocks = sample_blocks(params, n, rng, "sparsify", workers)
    u_records, chart_records = sparsification_records(
        [b.instance for b in blocks], [b.witness.x for b in blocks], r, spec, rng
    )
    u_table = _group_table(u_records, "local_input", min_group)
    chart_table = _group_table(chart_records, "chart", min_group)
    logger.info(
        "Sparsification tables built",
        m=params.m,
        n=n,
        u_groups=len(u_table.groups),
        chart_groups=len(chart_table.groups),
    )
    return SparsifyReport(
        m=params.m,
        n_blocks=n,
        radius=r,
        u_groups=u_table,
        chart_groups=chart_table,
        passed=u_table.flagged == 0 and chart_table.flagged == 0,
    )


class ShapeSignRow(BaseModel):
    shape: str
    layer: int
    occurrences: int
    negative_fraction: float
    band: float
    flagged: bool


def sign_marginals_by_shape(
    patterns: Sequence[SignedRootedPattern], min_occurrences: int = 1000
) -> List[ShapeSignRow]:
    """Negative-sign fraction per (unlabeled tree shape, variable layer).

    Each occurrence contributes the mean sign of the edges reaching that layer,
    so occurrences are the independent units behind the 4/sqrt(n) band.
    """
    per_shape: Dict[Tuple[str, int], List[float]] = {}
    for p in patterns:
        if not p.is_tree or not p.edges:
            continue
        shape = canonical_code(p, signed=False).hex()
        layers: Dict[int, List[int]] = {}
        for v, _, s in p.edges:
            layers.setdefault(p.variable_depths[v], []).append(s)
        for layer, signs in layers.items():
            per_shape.setdefault((shape, layer), []).append(sum(signs) / len(signs))
    rows = []
    for (shape, layer), values in sorted(per_shape.items()):
        if len(values) < min_occurrences:
            continue
        fraction = sum(values) / len(values)
        band = 4.0 / math.sqrt(len(values))
        rows.append(
            ShapeSignRow(
                shape=shape,
                layer=layer,
                occurrences=len(values),
                negative_fraction=fraction,
                band=band,
                flagged=abs(fraction - 0.5) > band,
            )
        )
    return rows

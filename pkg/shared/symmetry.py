"""
Promise-preserving sign flips, back-maps and the neutrality experiments.

T_i flips the signs of variable i's literals and moves b to b + A e_i; the
unique witness moves to X + e_i. g_sigma composes T_i over the support of
sigma. Both preserve the block distribution exactly when b is uniform.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel
from scipy import stats

from .ensemble import BlockSample, EnsembleParams, Instance, VvLayer, Witness, sample_blocks
from .exceptions import DimensionMismatchError, IndexOutOfRangeError, OffPromiseError
from .gf2 import BitVector, BitMatrix, column, inner_product, mat_vec_mul
from .hashing import Rng
from .sils import SilsSpec, SilsVector, extract_sils

logger = structlog.get_logger().bind(component="symmetry")

NEUTRALITY_MIN_BUCKET = 200
EXCHANGEABILITY_MIN_BUCKET = 1000


class BackMapMode(str, Enum):
    """How a prediction on g_sigma(Phi) is mapped back to Phi's coordinates."""

    COORDINATE = "coordinate"
    VVLABEL = "vvlabel"


@dataclass(frozen=True)
class LocalInput:
    """u_i(Phi) = (z, a_i, b)."""

    z: SilsVector
    a_i: BitVector
    b: BitVector

    @property
    def bit_length(self) -> int:
        return self.z.r_m + self.a_i.length + self.b.length

    def key(self) -> tuple:
        return (self.z.bits, self.z.r_m, self.a_i.word, self.a_i.length, self.b.word)

    def encode(self) -> str:
        """Stable text form used in tables and plug-in table dumps."""
        return f"{self.z.hex() or '-'}:{self.a_i.length}:{self.a_i.hex() or '-'}:{self.b.hex() or '-'}"


def local_input(inst: Instance, i: int, spec: SilsSpec, z: Optional[SilsVector] = None) -> LocalInput:
    if z is None:
        z = extract_sils(inst.signed_cnf, spec)
    return LocalInput(z=z, a_i=column(inst.vv.A, i), b=inst.vv.b)


def local_inputs(inst: Instance, spec: SilsSpec) -> List[LocalInput]:
    """u_i for every bit, sharing one sketch."""
    z = extract_sils(inst.signed_cnf, spec)
    return [local_input(inst, i, spec, z) for i in range(inst.m)]


def _require_promise(inst: Instance) -> None:
    if not inst.on_promise:
        raise OffPromiseError(
            "Sign-flip transforms are defined on on-promise instances only",
            details={"m": inst.m, "k": inst.k},
        )


def involution_Ti(inst: Instance, i: int) -> Instance:
    """(F^{tau_i h}, A, b + A e_i), witness X + e_i."""
    _require_promise(inst)
    if not 0 <= i < inst.m:
        raise IndexOutOfRangeError(i, inst.m)
    b = inst.vv.b ^ column(inst.vv.A, i)
    witness = None if inst.witness is None else Witness(inst.witness.x.flip(i))
    return Instance(inst.signed_cnf.flip_variable(i), VvLayer(inst.vv.A, b), witness, True)


def sign_flip_g(inst: Instance, sigma: BitVector) -> Instance:
    """(F^{(id, sigma) h}, A, b + A sigma), witness X + sigma."""
    _require_promise(inst)
    if sigma.length != inst.m:
        raise DimensionMismatchError("Sign-flip vector length differs from m", expected=inst.m, actual=sigma.length)
    b = inst.vv.b ^ mat_vec_mul(inst.vv.A, sigma)
    witness = None if inst.witness is None else Witness(inst.witness.x ^ sigma)
    return Instance(inst.signed_cnf.flip_signs(sigma), VvLayer(inst.vv.A, b), witness, True)


def back_map(
    pred: int,
    a_i: BitVector,
    sigma: BitVector,
    *,
    index: Optional[int] = None,
    parity_matrix: Optional[BitMatrix] = None,
    mode: BackMapMode = BackMapMode.COORDINATE,
) -> int:
    """Map a bit predicted on g_sigma(Phi) back to Phi.

    coordinate: pred + sigma_i (needs `index`).
    vvlabel: pred + <a_i, sigma>; a length-m sigma is first carried to label
    space as A sigma (needs `parity_matrix`).
    """
    mode = BackMapMode(mode)
    if mode is BackMapMode.COORDINATE:
        if index is None:
            raise ValueError("Coordinate back-map needs the bit index")
        return (pred ^ sigma[index]) & 1
    if sigma.length == a_i.length:
        return (pred ^ inner_product(a_i, sigma)) & 1
    if parity_matrix is None:
        raise DimensionMismatchError(
            "vvlabel back-map needs A to carry sigma into label space",
            expected=a_i.length,
            actual=sigma.length,
        )
    return (pred ^ inner_product(a_i, mat_vec_mul(parity_matrix, sigma))) & 1


def back_map_vector(pred: BitVector, sigma: BitVector, inst: Instance, mode: BackMapMode) -> BitVector:
    """Back-map every bit of a predicted assignment."""
    mode = BackMapMode(mode)
    if mode is BackMapMode.COORDINATE:
        return pred ^ sigma
    label = mat_vec_mul(inst.vv.A, sigma)
    word = 0
    for i in range(inst.m):
        if pred[i] ^ inner_product(column(inst.vv.A, i), label):
            word |= 1 << i
    return BitVector(word, inst.m)


class NeutralityView(str, Enum):
    """What the witness bit is conditioned on."""

    SILS = "sils"
    CONSTANT = "constant"
    POSITIVE_OCCURRENCES = "positive_occurrences"


class BucketRow(BaseModel):
    bit: int
    bucket: str
    count: int
    ones: int
    p_hat: float
    band: float
    flagged: bool


class NeutralityTable(BaseModel):
    view: NeutralityView
    min_bucket: int
    buckets: List[BucketRow]
    flagged: int
    small_bucket_mass: float


class NeutralityReport(BaseModel):
    n_blocks: int
    m: int
    marginals: List[float]
    marginal_band: float
    marginals_within_band: bool
    sils: NeutralityTable
    control: NeutralityTable
    passed: bool


def view_records(blocks: Sequence[BlockSample], spec: SilsSpec, view: NeutralityView) -> pd.DataFrame:
    """One row per (block, bit): bucket label of the view and the witness bit."""
    view = NeutralityView(view)
    rows: Dict[str, list] = {"block": [], "bit": [], "bucket": [], "x": []}
    for j, block in enumerate(blocks):
        inst = block.instance
        if view is NeutralityView.SILS:
            shared_bucket = extract_sils(inst.signed_cnf, spec).hex() or "-"
        for i in range(inst.m):
            if view is NeutralityView.SILS:
                bucket = shared_bucket
            elif view is NeutralityView.CONSTANT:
                bucket = "-"
            else:
                bucket = str(inst.signed_cnf.occurrence_counts(i)[0])
            rows["block"].append(j)
            rows["bit"].append(i)
            rows["bucket"].append(bucket)
            rows["x"].append(block.witness.x[i])
    return pd.DataFrame(rows)


def bias_table(records: pd.DataFrame, keys: List[str], min_bucket: int, label_column: str = "x") -> pd.DataFrame:
    """Per-group count, ones, p_hat and the 4/sqrt(n) band; flags only groups with n >= min_bucket."""
    grouped = records.groupby(keys, sort=True)[label_column].agg(["count", "sum"]).reset_index()
    grouped = grouped.rename(columns={"sum": "ones"})
    grouped["p_hat"] = grouped["ones"] / grouped["count"]
    grouped["band"] = 4.0 / np.sqrt(grouped["count"])
    grouped["flagged"] = (grouped["count"] >= min_bucket) & ((grouped["p_hat"] - 0.5).abs() > grouped["band"])
    return grouped


def _table(records: pd.DataFrame, view: NeutralityView, min_bucket: int) -> NeutralityTable:
    grouped = bias_table(records, ["bit", "bucket"], min_bucket)
    small = grouped.loc[grouped["count"] < min_bucket, "count"].sum()
    rows = [
        BucketRow(
            bit=int(row.bit),
            bucket=str(row.bucket),
            count=int(row.count),
            ones=int(row.ones),
            p_hat=float(row.p_hat),
            band=float(row.band),
            flagged=bool(row.flagged),
        )
        for row in grouped.itertuples(index=False)
    ]
    return NeutralityTable(
        view=view,
        min_bucket=min_bucket,
        buckets=rows,
        flagged=int(grouped["flagged"].sum()),
        small_bucket_mass=float(small / max(len(records), 1)),
    )


def neutrality_from_blocks(
    blocks: Sequence[BlockSample],
    spec: SilsSpec,
    min_bucket: int = NEUTRALITY_MIN_BUCKET,
    control_view: NeutralityView = NeutralityView.POSITIVE_OCCURRENCES,
) -> NeutralityReport:
    m = blocks[0].instance.m if blocks else 0
    n = len(blocks)
    sils_records = view_records(blocks, spec, NeutralityView.SILS)
    control_records = view_records(blocks, spec, control_view)
    marginals = sils_records.groupby("bit")["x"].mean().reindex(range(m), fill_value=0.0)
    band = 4.0 / math.sqrt(n) if n else 1.0
    within = bool(((marginals - 0.5).abs() <= band).all())
    sils_table = _table(sils_records, NeutralityView.SILS, min_bucket)
    control_table = _table(control_records, control_view, min_bucket)
    passed = within and sils_table.flagged == 0 and control_table.flagged > 0
    logger.info(
        "Neutrality tables built",
        n_blocks=n,
        m=m,
        sils_flagged=sils_table.flagged,
        control_flagged=control_table.flagged,
    )
    return NeutralityReport(
        n_blocks=n,
        m=m,
        marginals=[float(v) for v in marginals],
        marginal_band=band,
        marginals_within_band=within,
        sils=sils_table,
        control=control_table,
        passed=passed,
    )


def neutrality_experiment(
    params: EnsembleParams,
    n_blocks: int,
    rng: Rng,
    spec: Optional[SilsSpec] = None,
    min_bucket: int = NEUTRALITY_MIN_BUCKET,
    workers: int = 1,
) -> NeutralityReport:
    """Empirical Pr[X_i = 1 | z] per bit and sketch bucket, plus the sign-sensitive control."""
    spec = spec or SilsSpec()
    blocks = sample_blocks(params, n_blocks, rng, "neutrality", workers)
    return neutrality_from_blocks(blocks, spec, min_bucket)


class KsRow(BaseModel):
    statistic: str
    ks: float
    p_value: float


class MeasurePreservationReport(BaseModel):
    n_original: int
    n_transformed: int
    alpha: float
    tests: List[KsRow]
    passed: bool


def _summary_statistics(inst: Instance) -> Dict[str, int]:
    return {
        "negative_literals": inst.signed_cnf.negative_literal_count(),
        "b_weight": inst.vv.b.weight(),
        "witness_weight": inst.witness.x.weight(),
    }


def measure_preservation_check(
    blocks: Sequence[BlockSample], rng: Rng, alpha: float = 0.001
) -> MeasurePreservationReport:
    """Two-sample KS tests between D_m and g_sigma(D_m) with uniform sigma.

    The first half of the blocks is compared as drawn, the second half after a
    fresh uniform sign flip each, so the two samples are independent.
    """
    half = len(blocks) // 2
    original = [_summary_statistics(b.instance) for b in blocks[:half]]
    transformed = []
    for j, block in enumerate(blocks[half:]):
        sigma = rng.substream("measure", j).bits(block.instance.m)
        transformed.append(_summary_statistics(sign_flip_g(block.instance, sigma)))
    left = pd.DataFrame(original)
    right = pd.DataFrame(transformed)
    tests = []
    for name in ("negative_literals", "b_weight", "witness_weight"):
        result = stats.ks_2samp(left[name], right[name])
        tests.append(KsRow(statistic=name, ks=float(result.statistic), p_value=float(result.pvalue)))
    return MeasurePreservationReport(
        n_original=len(original),
        n_transformed=len(transformed),
        alpha=alpha,
        tests=tests,
        passed=all(t.p_value >= alpha for t in tests),
    )


class ExchangeabilityRow(BaseModel):
    bucket: str
    count: int
    p11: float
    p00: float
    band: float
    flagged: bool


class ExchangeabilityReport(BaseModel):
    min_bucket: int
    rows: List[ExchangeabilityRow]
    passed: bool


def exchangeability_records(
    blocks: Sequence[BlockSample],
    predict: Callable[[Instance], BitVector],
    spec: SilsSpec,
    rng: Rng,
    mode: BackMapMode = BackMapMode.COORDINATE,
) -> pd.DataFrame:
    """(bucket, x, y) rows with y the back-mapped prediction on a fresh g_sigma(Phi).

    The bucket is (z, a_i) with b taken up to the orbit {b, b + a_i} of T_i,
    which is the coarsest label that the flip of bit i leaves fixed.
    """
    rows: Dict[str, list] = {"bucket": [], "x": [], "y": []}
    for j, block in enumerate(blocks):
        inst = block.instance
        sigma = rng.substream("exchange", j).bits(inst.m)
        flipped = sign_flip_g(inst, sigma).public()
        y = back_map_vector(predict(flipped), sigma, inst, mode)
        z = extract_sils(inst.signed_cnf, spec)
        for i in range(inst.m):
            a_i = column(inst.vv.A, i)
            b = inst.vv.b
            orbit = min(b.word, (b ^ a_i).word)
            rows["bucket"].append(f"{i}|{z.hex() or '-'}|{a_i.length}:{a_i.word:x}|{orbit:x}")
            rows["x"].append(block.witness.x[i])
            rows["y"].append(y[i])
    return pd.DataFrame(rows)


def exchangeability_check(records: pd.DataFrame, min_bucket: int = EXCHANGEABILITY_MIN_BUCKET) -> ExchangeabilityReport:
    """|Pr[X=1, Y=1 | u] - Pr[X=0, Y=0 | u]| <= 4/sqrt(n_u) for buckets with n_u >= min_bucket."""
    frame = records.assign(
        both_one=(records["x"] == 1) & (records["y"] == 1),
        both_zero=(records["x"] == 0) & (records["y"] == 0),
    )
    grouped = frame.groupby("bucket", sort=True).agg(
        count=("x", "size"), p11=("both_one", "mean"), p00=("both_zero", "mean")
    )
    grouped = grouped[grouped["count"] >= min_bucket]
    rows = []
    for bucket, row in grouped.iterrows():
        band = 4.0 / math.sqrt(row["count"])
        rows.append(
            ExchangeabilityRow(
                bucket=str(bucket),
                count=int(row["count"]),
                p11=float(row["p11"]),
                p00=float(row["p00"]),
                band=band,
                flagged=abs(row["p11"] - row["p00"]) > band,
            )
        )
    return ExchangeabilityReport(min_bucket=min_bucket, rows=rows, passed=not any(r.flagged for r in rows))

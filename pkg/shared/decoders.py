"""
Decoders, wrappers and success experiments.

A decoder maps a tuple of public instances to one predicted assignment per
block. It is deterministic: any coins are fixed into its parameters, and its
identity is the registry name plus a 64-bit digest of those parameters.

Built-in registry:
    constant-zero   all-zero predictions
    sils-rule       a fixed function of the sketch z and the bit index
    local-parity    h(u) = <a_i, b>
    local-table     plug-in table h_i(u) loaded from a training artifact
    oracle          bit-fixing self-reduction with the coset-enumeration decider
"""

import hashlib
import itertools
import json
import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy import stats
from sklearn.metrics import accuracy_score
from sklearn.model_selection import train_test_split

from .ensemble import (
    BlockSample,
    EnsembleParams,
    Instance,
    Witness,
    count_solutions_capped,
    sample_tuple,
    verify_witness,
)
from .exceptions import (
    AssertionFailure,
    CodecError,
    DeciderInconsistencyError,
    EmptyTrainingSetError,
    OffPromiseError,
    UnknownDecoderError,
)
from .gf2 import BitVector, column, inner_product
from .hashing import (
    Rng,
    SignFlipFamily,
    default_kappa,
    default_symmetrization_draws,
    draw_sign_flip,
)
from .ledger import DescriptionLedger, UnionBoundCurve, identity_bits, seed_field_bits, union_bound_curve
from .parallel import ordered_map
from .sils import SilsSpec, carter_wegman, extract_sils
from .symmetry import BackMapMode, back_map_vector, local_inputs, sign_flip_g

logger = structlog.get_logger().bind(component="decoders")

PLUG_IN_MAGIC = b"PLUG"
PLUG_IN_VERSION = 1


def parameter_digest(name: str, params: Dict[str, Any]) -> int:
    payload = json.dumps({"name": name, "params": params}, sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest(), "big")


class Decoder(ABC):
    """Deterministic tuple decoder."""

    name: str = "decoder"

    def params(self) -> Dict[str, Any]:
        return {}

    @property
    def digest(self) -> int:
        return parameter_digest(self.name, self.params())

    @property
    def identifier(self) -> str:
        return f"{self.name}:{self.digest:016x}"

    def seed_material(self) -> bytes:
        """Seed bytes hard-wired into the description (empty for unseeded decoders)."""
        return b""

    def description_length(self) -> DescriptionLedger:
        return DescriptionLedger(
            identity_bits=identity_bits(self.name),
            seed_bits=seed_field_bits(self.seed_material()),
        )

    @abstractmethod
    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        """One predicted assignment per block."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.identifier})"


class ConstantZeroDecoder(Decoder):
    name = "constant-zero"

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        return [BitVector.zeros(inst.m) for inst in blocks]


class SilsRuleDecoder(Decoder):
    """x_i = low bit of a seeded hash of (z, i); reads nothing but the sketch."""

    name = "sils-rule"

    def __init__(self, spec: Optional[SilsSpec] = None, seed: int = 0):
        self.spec = spec or SilsSpec()
        self.seed = seed

    def params(self) -> Dict[str, Any]:
        return {"sils": self.spec.model_dump(mode="json"), "seed": self.seed}

    def seed_material(self) -> bytes:
        return struct.pack("<Q", self.seed)

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        out = []
        for inst in blocks:
            z = extract_sils(inst.signed_cnf, self.spec)
            word = 0
            for i in range(inst.m):
                key = (((z.bits << 8) | z.r_m) << 16) | i
                word |= carter_wegman(key, 1, self.seed, "sils-rule") << i
            out.append(BitVector(word, inst.m))
        return out


class LocalParityDecoder(Decoder):
    """h(u) = <a_i, b>."""

    name = "local-parity"

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        out = []
        for inst in blocks:
            word = 0
            for i in range(inst.m):
                if inner_product(column(inst.vv.A, i), inst.vv.b):
                    word |= 1 << i
            out.append(BitVector(word, inst.m))
        return out


class PlugInTable:
    """Per-bit majority table u -> {0, 1} with vote counts.

    Ties and unseen keys predict 0. Keys are `LocalInput.encode()` strings.
    """

    def __init__(self, m: int, votes: Sequence[Dict[str, Tuple[int, int]]]):
        if len(votes) != m:
            raise ValueError(f"Plug-in table needs {m} per-bit maps, got {len(votes)}")
        self.m = m
        self._votes = tuple(dict(sorted(v.items())) for v in votes)

    @classmethod
    def fit(cls, m: int, records: Iterable[Tuple[int, str, int]]) -> "PlugInTable":
        """Build a table from (bit, key, label) records."""
        counts: List[Dict[str, List[int]]] = [{} for _ in range(m)]
        seen = 0
        for i, key, label in records:
            cell = counts[i].setdefault(key, [0, 0])
            cell[label & 1] += 1
            seen += 1
        if seen == 0:
            raise EmptyTrainingSetError(details={"m": m})
        return cls(m, [{k: (c[0], c[1]) for k, c in per_bit.items()} for per_bit in counts])

    def votes(self, i: int, key: str) -> Tuple[int, int]:
        return self._votes[i].get(key, (0, 0))

    def predict(self, i: int, key: str) -> int:
        zeros, ones = self.votes(i, key)
        return 1 if ones > zeros else 0

    def keys(self, i: int) -> List[str]:
        return list(self._votes[i])

    def size(self) -> int:
        return sum(len(v) for v in self._votes)

    def digest(self) -> str:
        return hashlib.blake2b(self.to_bytes(), digest_size=8).hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlugInTable):
            return NotImplemented
        return self.m == other.m and self._votes == other._votes

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def to_bytes(self) -> bytes:
        out = bytearray(PLUG_IN_MAGIC)
        out += struct.pack("<BI", PLUG_IN_VERSION, self.m)
        for per_bit in self._votes:
            out += struct.pack("<I", len(per_bit))
            for key, (zeros, ones) in per_bit.items():
                raw = key.encode("utf-8")
                out += struct.pack("<I", len(raw)) + raw + struct.pack("<II", zeros, ones)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PlugInTable":
        if data[:4] != PLUG_IN_MAGIC:
            raise CodecError("Bad plug-in table magic", offset=0)
        try:
            version, m = struct.unpack_from("<BI", data, 4)
            if version != PLUG_IN_VERSION:
                raise CodecError(f"Unsupported plug-in table version {version}", offset=32)
            offset = 9
            votes = []
            for _ in range(m):
                (count,) = struct.unpack_from("<I", data, offset)
                offset += 4
                per_bit = {}
                for _ in range(count):
                    (length,) = struct.unpack_from("<I", data, offset)
                    offset += 4
                    key = data[offset : offset + length].decode("utf-8")
                    offset += length
                    per_bit[key] = struct.unpack_from("<II", data, offset)
                    offset += 8
                votes.append(per_bit)
        except struct.error as exc:
            raise CodecError(f"Truncated plug-in table: {exc}") from exc
        if offset != len(data):
            raise CodecError("Trailing bytes after plug-in table", offset=offset * 8)
        return cls(m, votes)

    def to_json(self) -> Dict[str, Any]:
        return {
            "version": PLUG_IN_VERSION,
            "m": self.m,
            "bits": [
                {key: {"zeros": z, "ones": o, "predict": 1 if o > z else 0} for key, (z, o) in per_bit.items()}
                for per_bit in self._votes
            ],
        }


class LocalTableDecoder(Decoder):
    """h_i(u_i) read from a frozen plug-in table."""

    name = "local-table"

    def __init__(self, table: PlugInTable, spec: Optional[SilsSpec] = None):
        self.table = table
        self.spec = spec or SilsSpec()

    def params(self) -> Dict[str, Any]:
        return {"table": self.table.digest(), "sils": self.spec.model_dump(mode="json")}

    def seed_material(self) -> bytes:
        return self.table.to_bytes()

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        out = []
        for inst in blocks:
            word = 0
            for i, u in enumerate(local_inputs(inst, self.spec)):
                word |= self.table.predict(i, u.encode()) << i
            out.append(BitVector(word, inst.m))
        return out


class CosetDecider:
    """USAT decider by coset enumeration; counts its calls.

    Raises:
        OffPromiseError: the queried instance has two or more solutions
    """

    def __init__(self, max_coset_dim: int = 26):
        self.max_coset_dim = max_coset_dim
        self.calls = 0

    def __call__(self, inst: Instance) -> bool:
        self.calls += 1
        count = count_solutions_capped(inst, 2, self.max_coset_dim)
        if count >= 2:
            raise OffPromiseError(
                "Decider query has more than one solution",
                details={"m": inst.m, "k": inst.k},
            )
        return count == 1


def self_reduce(inst: Instance, decider: CosetDecider) -> Witness:
    """Recover the witness with exactly m decider calls, fixing bits in index order.

    Raises:
        DeciderInconsistencyError: the assembled assignment is not a solution
    """
    current = inst.public()
    word = 0
    for i in range(inst.m):
        fixed_zero = current.restrict(i, 0)
        if decider(fixed_zero):
            current = fixed_zero
        else:
            current = current.restrict(i, 1)
            word |= 1 << i
    x = BitVector(word, inst.m)
    if not verify_witness(inst, x):
        raise DeciderInconsistencyError(
            "Bit-fixing produced an assignment that does not solve the instance",
            details={"m": inst.m, "k": inst.k},
        )
    return Witness(x)


class OracleDecoder(Decoder):
    """Self-reduction with the exponential-time coset decider."""

    name = "oracle"

    def __init__(self, max_coset_dim: int = 26):
        self.max_coset_dim = max_coset_dim

    def params(self) -> Dict[str, Any]:
        return {"max_coset_dim": self.max_coset_dim}

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        return [self_reduce(inst, CosetDecider(self.max_coset_dim)).x for inst in blocks]


def _split_flips(sigma: BitVector, m: int, t: int) -> List[BitVector]:
    mask = (1 << m) - 1
    return [BitVector((sigma.word >> (j * m)) & mask, m) for j in range(t)]


class SymmetrizationStats(BaseModel):
    n_blocks: int
    draws: int
    base_success: float
    comparator_success: float
    majority_success: float
    difference: float
    band: float
    passed: bool


class SymmetrizedDecoder(Decoder):
    """Runs the base decoder on s sign-flipped copies and takes per-bit majorities.

    Draw r flips the whole tuple by sigma^(r), a kappa-wise independent vector
    of length m t from the family seeded by `seed`; predictions are back-mapped
    before voting. `zero_flips` forces every sigma to 0.
    """

    name = "symmetrized"

    def __init__(
        self,
        base: Decoder,
        s: int,
        kappa: int,
        seed: int,
        mode: BackMapMode = BackMapMode.COORDINATE,
        zero_flips: bool = False,
    ):
        if s < 1 or s % 2 == 0:
            raise ValueError(f"Symmetrization needs an odd number of draws, got s={s}")
        self.base = base
        self.s = s
        self.kappa = kappa
        self.seed = seed
        self.mode = BackMapMode(mode)
        self.zero_flips = zero_flips

    def params(self) -> Dict[str, Any]:
        return {
            "base": self.base.identifier,
            "s": self.s,
            "kappa": self.kappa,
            "seed": self.seed,
            "mode": self.mode.value,
            "zero_flips": self.zero_flips,
        }

    def seed_material(self) -> bytes:
        return struct.pack("<QII", self.seed, self.s, self.kappa) + self.base.seed_material()

    def flips(self, m: int, t: int) -> List[List[BitVector]]:
        """flips[r][j] = sigma^(r) restricted to block j."""
        if self.zero_flips:
            return [[BitVector.zeros(m) for _ in range(t)] for _ in range(self.s)]
        family = SignFlipFamily(self.kappa, m * t, Rng(self.seed))
        return [_split_flips(draw_sign_flip(family, r), m, t) for r in range(self.s)]

    def runs(self, blocks: Sequence[Instance]) -> List[List[BitVector]]:
        """Back-mapped base predictions, one list per draw."""
        if not blocks:
            return [[] for _ in range(self.s)]
        m = blocks[0].m
        out = []
        for sigmas in self.flips(m, len(blocks)):
            flipped = [sign_flip_g(inst, sigma).public() for inst, sigma in zip(blocks, sigmas)]
            preds = self.base.predict(flipped)
            out.append(
                [back_map_vector(p, sigma, inst, self.mode) for p, sigma, inst in zip(preds, sigmas, blocks)]
            )
        return out

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        runs = self.runs(blocks)
        out = []
        for j, inst in enumerate(blocks):
            votes = np.zeros(inst.m, dtype=np.int64)
            for run in runs:
                votes += run[j].to_numpy()
            out.append(BitVector.from_numpy((2 * votes > self.s).astype(np.uint8)))
        return out

    def success_domination(self, blocks: Sequence[Instance], truths: Sequence[BitVector]) -> SymmetrizationStats:
        """Per-bit success of the base, of the average back-mapped flipped run, and of the majority.

        The band is 3 standard errors of the per-block difference between the
        base and the averaged comparator.
        """
        base_preds = self.base.predict(blocks)
        runs = self.runs(blocks)
        majority = self.predict(blocks)
        n = len(blocks)
        base_rate = np.array([_bit_success(p, x) for p, x in zip(base_preds, truths)])
        comparator = np.array(
            [np.mean([_bit_success(run[j], truths[j]) for run in runs]) for j in range(n)]
        )
        majority_rate = np.array([_bit_success(p, x) for p, x in zip(majority, truths)])
        diff = base_rate - comparator
        band = 3.0 * float(np.std(diff, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        difference = float(diff.mean()) if n else 0.0
        return SymmetrizationStats(
            n_blocks=n,
            draws=self.s,
            base_success=float(base_rate.mean()) if n else 0.0,
            comparator_success=float(comparator.mean()) if n else 0.0,
            majority_success=float(majority_rate.mean()) if n else 0.0,
            difference=difference,
            band=band,
            passed=abs(difference) <= band + 1e-12,
        )


def _bit_success(pred: BitVector, truth: BitVector) -> float:
    return 1.0 - (pred ^ truth).weight() / truth.length


def symmetrization_preservation(
    P: Decoder,
    blocks: Sequence[BlockSample],
    s: int,
    kappa: int,
    rng: Rng,
    t: int,
    mode: BackMapMode = BackMapMode.COORDINATE,
) -> SymmetrizationStats:
    """Success of P against its averaged back-mapped flipped runs, over consecutive t-tuples.

    Each tuple gets its own symmetrization seed (substream ("sym-tuple", n)).
    The band is 3 standard errors of the per-block differences pooled over all tuples.
    """
    base_rates: List[float] = []
    comparator: List[float] = []
    majority: List[float] = []
    for n, start in enumerate(range(0, len(blocks), t)):
        chunk = blocks[start : start + t]
        instances = [b.instance.public() for b in chunk]
        truths = [b.witness.x for b in chunk]
        wrapper = SymmetrizedDecoder(P, s, kappa, rng.substream("sym-tuple", n).word(64), mode)
        runs = wrapper.runs(instances)
        for pred, x in zip(P.predict(instances), truths):
            base_rates.append(_bit_success(pred, x))
        for j, x in enumerate(truths):
            comparator.append(float(np.mean([_bit_success(run[j], x) for run in runs])))
        for pred, x in zip(wrapper.predict(instances), truths):
            majority.append(_bit_success(pred, x))
    diff = np.asarray(base_rates) - np.asarray(comparator)
    n_blocks = diff.size
    band = 3.0 * float(np.std(diff, ddof=1)) / math.sqrt(n_blocks) if n_blocks > 1 else 0.0
    difference = float(diff.mean()) if n_blocks else 0.0
    stats_row = SymmetrizationStats(
        n_blocks=n_blocks,
        draws=s,
        base_success=float(np.mean(base_rates)) if n_blocks else 0.0,
        comparator_success=float(np.mean(comparator)) if n_blocks else 0.0,
        majority_success=float(np.mean(majority)) if n_blocks else 0.0,
        difference=difference,
        band=band,
        passed=abs(difference) <= band + 1e-12,
    )
    logger.info(
        "Symmetrization success compared",
        decoder=P.identifier,
        n_blocks=n_blocks,
        difference=difference,
        band=band,
    )
    return stats_row


def wrap_symmetrize(
    P: Decoder,
    s: Optional[int],
    kappa: Optional[int],
    rng: Rng,
    mode: BackMapMode = BackMapMode.COORDINATE,
    m: Optional[int] = None,
    t: Optional[int] = None,
) -> SymmetrizedDecoder:
    """Fix a symmetrization seed from rng; s and kappa default to the Chernoff choices for (m, t)."""
    if s is None or kappa is None:
        if m is None or t is None:
            raise ValueError("Default s and kappa need m and t")
        s = s or default_symmetrization_draws(m, t)
        kappa = kappa or default_kappa(m, t)
    return SymmetrizedDecoder(P, s, kappa, rng.word(64), mode)


class ErmSplit(BaseModel):
    """Partition [0, t) = train + test."""

    model_config = ConfigDict(frozen=True)

    train: Tuple[int, ...]
    test: Tuple[int, ...]
    seed: int

    @classmethod
    def random(cls, t: int, seed: int, train_fraction: float = 0.5) -> "ErmSplit":
        if t < 2:
            raise EmptyTrainingSetError(
                "ERM needs a tuple of at least two blocks", details={"t": t}
            )
        train, test = train_test_split(
            np.arange(t),
            train_size=train_fraction,
            random_state=seed % (1 << 32),
            shuffle=True,
        )
        return cls(train=tuple(sorted(int(j) for j in train)), test=tuple(sorted(int(j) for j in test)), seed=seed)


@dataclass(frozen=True)
class ErmRun:
    predictions: List[BitVector]
    table: PlugInTable
    split: ErmSplit


class ErmDecoder(Decoder):
    """Plug-in ERM wrapper.

    On the training blocks T it records surrogate labels (majorities of the
    symmetrized base decoder) per local input u_{j,i} and fits a plug-in
    table; test blocks S are predicted by the table, training blocks by the
    base decoder.
    """

    name = "erm"

    def __init__(
        self,
        base: Decoder,
        seed: int,
        s: int,
        kappa: int,
        train_fraction: float = 0.5,
        spec: Optional[SilsSpec] = None,
        mode: BackMapMode = BackMapMode.COORDINATE,
        sym_seed: Optional[int] = None,
    ):
        self.base = base
        self.seed = seed
        self.train_fraction = train_fraction
        self.spec = spec or SilsSpec()
        self.mode = BackMapMode(mode)
        if sym_seed is None:
            sym_seed = Rng(seed).substream("erm-sym").word(64)
        self.symmetrized = SymmetrizedDecoder(base, s, kappa, sym_seed, self.mode)

    def params(self) -> Dict[str, Any]:
        return {
            "symmetrized": self.symmetrized.identifier,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "sils": self.spec.model_dump(mode="json"),
        }

    def seed_material(self) -> bytes:
        return struct.pack("<Qd", self.seed, self.train_fraction) + self.symmetrized.seed_material()

    def split(self, t: int) -> ErmSplit:
        return ErmSplit.random(t, self.seed, self.train_fraction)

    def fit(self, blocks: Sequence[Instance], split: ErmSplit) -> PlugInTable:
        if not split.train:
            raise EmptyTrainingSetError(details={"t": len(blocks)})
        train_blocks = [blocks[j] for j in split.train]
        labels = self.symmetrized.predict(train_blocks)
        records = []
        for inst, label in zip(train_blocks, labels):
            for i, u in enumerate(local_inputs(inst, self.spec)):
                records.append((i, u.encode(), label[i]))
        return PlugInTable.fit(blocks[0].m, records)

    def run(self, blocks: Sequence[Instance]) -> ErmRun:
        split = self.split(len(blocks))
        table = self.fit(blocks, split)
        predictions: List[Optional[BitVector]] = [None] * len(blocks)
        for j, pred in zip(split.train, self.base.predict([blocks[j] for j in split.train])):
            predictions[j] = pred
        for j in split.test:
            word = 0
            for i, u in enumerate(local_inputs(blocks[j], self.spec)):
                word |= table.predict(i, u.encode()) << i
            predictions[j] = BitVector(word, blocks[j].m)
        return ErmRun(predictions=predictions, table=table, split=split)

    def predict(self, blocks: Sequence[Instance]) -> List[BitVector]:
        return self.run(blocks).predictions


def wrap_erm(
    P: Decoder,
    split_seed: int,
    s: int,
    kappa: int,
    rng: Rng,
    train_fraction: float = 0.5,
    spec: Optional[SilsSpec] = None,
    mode: BackMapMode = BackMapMode.COORDINATE,
) -> ErmDecoder:
    """Fix the split seed and draw the surrogate-label symmetrization seed from rng."""
    return ErmDecoder(P, split_seed, s, kappa, train_fraction, spec, mode, sym_seed=rng.word(64))


class DecoderRegistry:
    """Decoders addressable by (name, parameter digest)."""

    def __init__(self):
        self._decoders: Dict[Tuple[str, int], Decoder] = {}

    def register(self, decoder: Decoder) -> Decoder:
        self._decoders[(decoder.name, decoder.digest)] = decoder
        return decoder

    def resolve(self, name: str, digest: int) -> Decoder:
        try:
            return self._decoders[(name, digest)]
        except KeyError:
            raise UnknownDecoderError(name, f"{digest:016x}") from None

    def by_name(self, name: str) -> Decoder:
        for (registered, _), decoder in sorted(self._decoders.items(), key=lambda item: item[0]):
            if registered == name:
                return decoder
        raise UnknownDecoderError(name)

    def names(self) -> List[str]:
        return sorted({name for name, _ in self._decoders})

    def local_decoders(self) -> List[Decoder]:
        return [d for key, d in sorted(self._decoders.items(), key=lambda item: item[0]) if d.name != OracleDecoder.name]

    def __contains__(self, decoder: Decoder) -> bool:
        return (decoder.name, decoder.digest) in self._decoders


def default_registry(
    spec: Optional[SilsSpec] = None,
    table: Optional[PlugInTable] = None,
    max_coset_dim: int = 26,
    rule_seed: int = 0,
) -> DecoderRegistry:
    registry = DecoderRegistry()
    registry.register(ConstantZeroDecoder())
    registry.register(SilsRuleDecoder(spec, rule_seed))
    registry.register(LocalParityDecoder())
    if table is not None:
        registry.register(LocalTableDecoder(table, spec))
    registry.register(OracleDecoder(max_coset_dim))
    return registry


class PivotRates(BaseModel):
    n: int
    pivot: int
    block_rate: float
    pivot_rate: float


def pivot_success(D: Decoder, pivot: int, blocks: Sequence[Instance], truths: Sequence[BitVector]) -> PivotRates:
    """Block-exact rate and pivot-bit rate; the first never exceeds the second."""
    preds = D.predict([b.public() for b in blocks])
    exact = sum(1 for p, x in zip(preds, truths) if p == x)
    pivot_hits = sum(1 for p, x in zip(preds, truths) if p[pivot] == x[pivot])
    n = len(truths)
    if exact > pivot_hits:
        raise AssertionFailure(
            "Block-exact successes exceed pivot-bit successes",
            check="pivot_inequality",
            details={"exact": exact, "pivot": pivot_hits},
        )
    return PivotRates(
        n=n,
        pivot=pivot,
        block_rate=exact / n if n else 0.0,
        pivot_rate=pivot_hits / n if n else 0.0,
    )


class PairTest(BaseModel):
    first: int
    second: int
    chi2: Optional[float]
    p_value: Optional[float]
    degenerate: bool


class IndependenceResult(BaseModel):
    alpha: float
    corrected_alpha: float
    pairs: List[PairTest]
    passed: bool


def pairwise_independence_test(indicators: np.ndarray, alpha: float = 0.001) -> IndependenceResult:
    """Chi-square contingency test for every pair of columns of a 0/1 matrix.

    The per-pair level is alpha divided by the number of pairs. Pairs whose 2x2
    table has an empty row or column are reported as degenerate and not tested.
    """
    indicators = np.asarray(indicators, dtype=np.int64)
    columns = indicators.shape[1] if indicators.ndim == 2 else 0
    pairs = list(itertools.combinations(range(columns), 2))
    corrected = alpha / max(len(pairs), 1)
    results = []
    for a, b in pairs:
        table = np.zeros((2, 2), dtype=np.int64)
        np.add.at(table, (indicators[:, a], indicators[:, b]), 1)
        if (table.sum(axis=0) == 0).any() or (table.sum(axis=1) == 0).any():
            results.append(PairTest(first=a, second=b, chi2=None, p_value=None, degenerate=True))
            continue
        chi2, p_value, _, _ = stats.chi2_contingency(table)
        results.append(PairTest(first=a, second=b, chi2=float(chi2), p_value=float(p_value), degenerate=False))
    passed = all(r.degenerate or r.p_value >= corrected for r in results)
    return IndependenceResult(alpha=alpha, corrected_alpha=corrected, pairs=results, passed=passed)


class ProductComparison(BaseModel):
    per_block_rates: List[float]
    all_success: float
    product: float
    band: float
    within_band: bool


class SuccessReport(BaseModel):
    decoder: str
    t: int
    n_tuples: int
    test_blocks: List[int]
    pivot: int
    exact: ProductComparison
    pivot_bits: ProductComparison
    per_bit_rates: List[List[float]]
    gamma_structural: float
    gamma_banded: float
    independence: IndependenceResult
    union_bound: UnionBoundCurve
    passed: bool


def _product_comparison(indicators: np.ndarray) -> ProductComparison:
    n = indicators.shape[0]
    rates = indicators.mean(axis=0) if n else np.zeros(indicators.shape[1])
    all_success = float(indicators.all(axis=1).mean()) if n else 0.0
    product = float(np.prod(rates))
    band = 3.0 * math.sqrt(max(product * (1.0 - product), 1.0 / max(n, 1)) / max(n, 1))
    return ProductComparison(
        per_block_rates=[float(r) for r in rates],
        all_success=all_success,
        product=product,
        band=band,
        within_band=abs(all_success - product) <= band,
    )


def _tuple_job(job: Tuple[Decoder, EnsembleParams, int, Rng]) -> Tuple[List[BitVector], List[BitVector]]:
    decoder, params, t, rng = job
    blocks = sample_tuple(t, params, rng)
    preds = decoder.predict([b.instance.public() for b in blocks])
    return preds, [b.witness.x for b in blocks]


def product_bound_experiment(
    D: Decoder,
    t: int,
    n_tuples: int,
    rng: Rng,
    params: EnsembleParams,
    pivot: int = 0,
    delta: Optional[float] = None,
    gamma: Optional[float] = None,
    epsilon: float = 0.0,
    workers: int = 1,
) -> SuccessReport:
    """All-test-block success against the product of per-block rates, for a fixed decoder.

    Test blocks are the decoder's ERM test set when it has one, otherwise all
    t blocks. The union-bound curve uses gamma (default: the structural
    fraction |S|/t), delta (default gamma / 8) and epsilon.
    """

    test = list(D.split(t).test) if isinstance(D, ErmDecoder) else list(range(t))
    jobs = [(D, params, t, rng.substream("tuple", n)) for n in range(n_tuples)]
    results = ordered_map(_tuple_job, jobs, workers)
    m = params.m
    exact = np.zeros((n_tuples, len(test)), dtype=np.int64)
    pivots = np.zeros((n_tuples, len(test)), dtype=np.int64)
    bit_hits = np.zeros((len(test), m), dtype=np.int64)
    for n, (preds, truths) in enumerate(results):
        for col, j in enumerate(test):
            agree = ~(preds[j] ^ truths[j]).to_numpy().astype(bool)
            exact[n, col] = int(agree.all())
            pivots[n, col] = int(agree[pivot])
            bit_hits[col] += agree
    exact_cmp = _product_comparison(exact)
    pivot_cmp = _product_comparison(pivots)
    per_bit = bit_hits / max(n_tuples, 1)
    band = 4.0 / math.sqrt(max(n_tuples, 1))
    banded = sum(1 for row in per_bit if np.all(np.abs(row - 0.5) <= band))
    gamma_structural = len(test) / t
    if gamma is None:
        gamma = gamma_structural
    if delta is None:
        delta = gamma / 8
    curve = union_bound_curve(delta, gamma, epsilon, range(1, t + 1))
    independence = pairwise_independence_test(pivots)
    logger.info(
        "Product bound measured",
        decoder=D.identifier,
        t=t,
        n_tuples=n_tuples,
        all_success=exact_cmp.all_success,
        pivot_all=pivot_cmp.all_success,
    )
    return SuccessReport(
        decoder=D.identifier,
        t=t,
        n_tuples=n_tuples,
        test_blocks=test,
        pivot=pivot,
        exact=exact_cmp,
        pivot_bits=pivot_cmp,
        per_bit_rates=[[float(v) for v in row] for row in per_bit],
        gamma_structural=gamma_structural,
        gamma_banded=banded / t,
        independence=independence,
        union_bound=curve,
        passed=exact_cmp.within_band and pivot_cmp.within_band and independence.passed,
    )


def block_truths(blocks: Sequence[BlockSample]) -> List[BitVector]:
    return [b.witness.x for b in blocks]


class SelfReductionReport(BaseModel):
    n_blocks: int
    m: int
    witnesses_match: int
    exact_call_counts: int
    passed: bool


def self_reduction_check(blocks: Sequence[BlockSample], max_coset_dim: int = 26) -> SelfReductionReport:
    """Bit-fixing recovery against the sampler's witness, with the call count per block."""
    matches = 0
    exact_calls = 0
    for block in blocks:
        decider = CosetDecider(max_coset_dim)
        recovered = self_reduce(block.instance.public(), decider)
        matches += int(recovered.x == block.witness.x)
        exact_calls += int(decider.calls == block.instance.m)
    n = len(blocks)
    m = blocks[0].instance.m if blocks else 0
    logger.info("Self-reduction checked", n_blocks=n, m=m, matches=matches, exact_calls=exact_calls)
    return SelfReductionReport(
        n_blocks=n,
        m=m,
        witnesses_match=matches,
        exact_call_counts=exact_calls,
        passed=matches == n and exact_calls == n,
    )


def erm_u_measurable(run: ErmRun, blocks: Sequence[Instance], spec: SilsSpec) -> bool:
    """Every test-block prediction equals the frozen table's value at that block's local input."""
    for j in run.split.test:
        for i, u in enumerate(local_inputs(blocks[j], spec)):
            if run.predictions[j][i] != run.table.predict(i, u.encode()):
                return False
    return True


class PlugInCheck(BaseModel):
    alphabet: int
    margin: float
    n_train: int
    n_test: int
    disagreement: float
    passed: bool


def synthetic_plugin_check(
    n_train: int,
    rng: Rng,
    alphabet: int = 64,
    margin: float = 0.1,
    n_test: int = 10_000,
    tolerance: float = 0.01,
) -> PlugInCheck:
    """Plug-in rule against the Bayes rule on a finite alphabet with known conditional means.

    f(u) is drawn uniformly from [0.05, 1/2 - margin] or [1/2 + margin, 0.95];
    inputs are uniform over the alphabet. Disagreement is measured on fresh
    test inputs against 1[f(u) >= 1/2].
    """
    gen = rng.substream("plugin-task").generator
    low = gen.uniform(0.05, 0.5 - margin, size=alphabet)
    high = gen.uniform(0.5 + margin, 0.95, size=alphabet)
    f = np.where(gen.integers(0, 2, size=alphabet) == 1, high, low)
    keys = [f"u{a:04d}" for a in range(alphabet)]

    train_gen = rng.substream("plugin-train").generator
    train_u = train_gen.integers(0, alphabet, size=n_train)
    train_y = (train_gen.random(n_train) < f[train_u]).astype(int)
    table = PlugInTable.fit(1, ((0, keys[u], int(y)) for u, y in zip(train_u, train_y)))

    test_u = rng.substream("plugin-test").generator.integers(0, alphabet, size=n_test)
    bayes = (f[test_u] >= 0.5).astype(int)
    plug_in = np.array([table.predict(0, keys[u]) for u in test_u])
    disagreement = 1.0 - float(accuracy_score(bayes, plug_in)) if n_test else 0.0
    return PlugInCheck(
        alphabet=alphabet,
        margin=margin,
        n_train=n_train,
        n_test=n_test,
        disagreement=disagreement,
        passed=disagreement <= tolerance,
    )


def train_plugin_table(
    base: Decoder,
    blocks: Sequence[Instance],
    s: int,
    kappa: int,
    sym_seed: int,
    spec: Optional[SilsSpec] = None,
    mode: BackMapMode = BackMapMode.COORDINATE,
    t: Optional[int] = None,
) -> PlugInTable:
    """Fit a plug-in table on every given block, with surrogate labels from the symmetrized base.

    Blocks are labeled in consecutive tuples of length t (default: all at once),
    tuple n using the seed substream ("train-tuple", n).
    """
    spec = spec or SilsSpec()
    if not blocks:
        raise EmptyTrainingSetError(details={"blocks": 0})
    t = t or len(blocks)
    records = []
    for n, start in enumerate(range(0, len(blocks), t)):
        chunk = blocks[start : start + t]
        wrapper = SymmetrizedDecoder(base, s, kappa, Rng(sym_seed).substream("train-tuple", n).word(64), mode)
        for inst, label in zip(chunk, wrapper.predict(chunk)):
            for i, u in enumerate(local_inputs(inst, spec)):
                records.append((i, u.encode(), label[i]))
    table = PlugInTable.fit(blocks[0].m, records)
    logger.info("Plug-in table trained", blocks=len(blocks), keys=table.size(), base=base.identifier)
    return table

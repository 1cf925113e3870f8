"""
Compression-from-success codecs.

Both codecs write a self-describing bit string (bitarray, big-endian within
fields):

    magic (8) | version (8) | decoder identity | seed field | gamma(t + 1) | body

decoder identity = gamma(len(name) + 1) | name bytes | 64-bit parameter digest
seed field       = gamma(len(seed) + 1) | seed bytes

Coarse body: gamma(|S| + 1) | gamma(nbytes + 1) | rank(S) as nbytes big-endian
bytes | x_j verbatim (m bits, bit i first) for each j not in S, in index order.

Fine body, per block: gamma(|E_j| + 1) | rank(E_j) in ceil(log2 C(m, |E_j|)) bits.

Every ledger is itemized so that `ledger.total == len(codeword.bits)`.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from bitarray import bitarray
from bitarray.util import ba2int, int2ba
from pydantic import BaseModel, Field
from scipy import stats

from .decoders import Decoder, DecoderRegistry
from .ensemble import EnsembleParams, Instance, sample_tuple
from .exceptions import CodecError, DimensionMismatchError, RankOutOfRangeError
from .gf2 import BitVector
from .hashing import Rng
from .ledger import (
    DescriptionLedger,
    gamma_length,
    header_allowance,
    identity_bits,
    seed_field_bits,
    union_bound_curve,
)

logger = structlog.get_logger().bind(component="codec")

COARSE_MAGIC = 0xC5
FINE_MAGIC = 0xF5
CODEC_VERSION = 1
CONTROL_HEADER_BITS = 16
BOUND_EPSILON = 1e-9

__all__ = [
    "Codeword",
    "ErrorMask",
    "binomial_rank",
    "binomial_unrank",
    "ceil_log2_comb",
    "encode_coarse",
    "decode_coarse",
    "encode_fine",
    "decode_fine",
    "coarse_bound",
    "fine_bound",
    "fine_entropy_bound",
    "audit",
    "adversarial_truths",
    "clash_curve",
    "union_bound_curve",
]


def ceil_log2_comb(n: int, w: int) -> int:
    """ceil(log2 C(n, w)), exact on big integers."""
    return (math.comb(n, w) - 1).bit_length()


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binomial_rank(subset: Iterable[int], n: int) -> int:
    """Combinatorial-number-system rank of a subset of [0, n): sum of C(c_i, i + 1) over sorted c_i."""
    elements = sorted(set(int(c) for c in subset))
    if elements and (elements[0] < 0 or elements[-1] >= n):
        raise RankOutOfRangeError(
            rank=-1, n=n, w=len(elements), details={"subset": elements}
        )
    return sum(math.comb(c, i + 1) for i, c in enumerate(elements))


def binomial_unrank(n: int, w: int, rank: int) -> List[int]:
    """The w-subset of [0, n) with the given rank, ascending.

    Raises:
        RankOutOfRangeError: rank is outside [0, C(n, w))
    """
    if w < 0 or w > n or rank < 0 or rank >= math.comb(n, w):
        raise RankOutOfRangeError(rank=rank, n=n, w=w)
    out = []
    c = n - 1
    for i in range(w, 0, -1):
        while math.comb(c, i) > rank:
            c -= 1
        out.append(c)
        rank -= math.comb(c, i)
        c -= 1
    return sorted(out)


def write_gamma(out: bitarray, n: int) -> None:
    """Elias-gamma code of n >= 1."""
    if n < 1:
        raise ValueError(f"Elias-gamma codes positive integers, got {n}")
    width = n.bit_length()
    out.extend(bitarray("0" * (width - 1), endian="big"))
    out.extend(int2ba(n, length=width, endian="big"))


def write_bytes(out: bitarray, data: bytes) -> None:
    chunk = bitarray(endian="big")
    chunk.frombytes(data)
    out.extend(chunk)


def write_uint(out: bitarray, value: int, width: int) -> None:
    if width == 0:
        if value:
            raise ValueError(f"Value {value} does not fit in zero bits")
        return
    out.extend(int2ba(value, length=width, endian="big"))


class BitReader:
    """Sequential reader over a codeword; every overrun is a CodecError."""

    def __init__(self, bits: bitarray):
        self.bits = bits
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.pos

    def read_uint(self, width: int) -> int:
        if width == 0:
            return 0
        if width > self.remaining:
            raise CodecError("Codeword truncated", offset=self.pos, details={"wanted": width})
        value = ba2int(self.bits[self.pos : self.pos + width])
        self.pos += width
        return value

    def read_gamma(self) -> int:
        zeros = 0
        while True:
            if self.remaining == 0:
                raise CodecError("Codeword truncated inside an Elias-gamma field", offset=self.pos)
            if self.bits[self.pos]:
                break
            zeros += 1
            self.pos += 1
        return self.read_uint(zeros + 1)

    def read_bytes(self, count: int) -> bytes:
        return bytes(self.read_uint(8) for _ in range(count))


@dataclass(frozen=True)
class Codeword:
    bits: bitarray

    def __len__(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        """Zero-padded to whole bytes; keep len(self) to read it back."""
        return self.bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, nbits: int) -> "Codeword":
        bits = bitarray(endian="big")
        bits.frombytes(data)
        if nbits > len(bits):
            raise CodecError("Declared bit length exceeds the data", offset=len(bits))
        return cls(bits[:nbits])

    def hex(self) -> str:
        return self.to_bytes().hex()


@dataclass(frozen=True)
class ErrorMask:
    """E_j per block, as length-m bit vectors: prediction xor mask == truth."""

    m: int
    masks: Tuple[BitVector, ...]

    @classmethod
    def from_predictions(cls, predictions: Sequence[BitVector], truths: Sequence[BitVector]) -> "ErrorMask":
        if len(predictions) != len(truths):
            raise DimensionMismatchError(
                "Prediction and truth counts differ", expected=len(truths), actual=len(predictions)
            )
        m = truths[0].length if truths else 0
        return cls(m, tuple(p ^ x for p, x in zip(predictions, truths)))

    def positions(self, j: int) -> List[int]:
        return self.masks[j].support()

    def weights(self) -> List[int]:
        return [mask.weight() for mask in self.masks]

    def correct_blocks(self) -> List[int]:
        return [j for j, mask in enumerate(self.masks) if mask.weight() == 0]

    def apply(self, predictions: Sequence[BitVector]) -> List[BitVector]:
        return [p ^ mask for p, mask in zip(predictions, self.masks)]


def _write_header(out: bitarray, magic: int, D: Decoder, t: int) -> Tuple[int, int]:
    write_uint(out, magic, 8)
    write_uint(out, CODEC_VERSION, 8)
    name = D.name.encode("utf-8")
    write_gamma(out, len(name) + 1)
    write_bytes(out, name)
    write_uint(out, D.digest, 64)
    seed = D.seed_material()
    write_gamma(out, len(seed) + 1)
    write_bytes(out, seed)
    write_gamma(out, t + 1)
    return identity_bits(D.name), seed_field_bits(seed)


def _read_header(reader: BitReader, magic: int, registry: DecoderRegistry) -> Tuple[Decoder, int]:
    found = reader.read_uint(8)
    if found != magic:
        raise CodecError(f"Bad codeword magic 0x{found:02x}", offset=0)
    version = reader.read_uint(8)
    if version != CODEC_VERSION:
        raise CodecError(f"Unsupported codeword version {version}", offset=8)
    name_length = reader.read_gamma() - 1
    try:
        name = reader.read_bytes(name_length).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CodecError(f"Decoder name is not UTF-8: {exc}", offset=reader.pos) from exc
    digest = reader.read_uint(64)
    D = registry.resolve(name, digest)
    seed_length = reader.read_gamma() - 1
    seed = reader.read_bytes(seed_length)
    if seed != D.seed_material():
        raise CodecError("Seed field does not match the registered decoder", offset=reader.pos)
    t = reader.read_gamma() - 1
    return D, t


def _check_lengths(blocks: Sequence[Instance], truths: Sequence[BitVector]) -> None:
    if len(blocks) != len(truths):
        raise DimensionMismatchError("Block and truth counts differ", expected=len(blocks), actual=len(truths))
    for inst, x in zip(blocks, truths):
        if x.length != inst.m:
            raise DimensionMismatchError("Truth length differs from m", expected=inst.m, actual=x.length)


def _check_t(t: int, blocks: Sequence[Instance], reader: BitReader) -> None:
    if t != len(blocks):
        raise CodecError(
            "Codeword tuple length differs from the supplied blocks",
            offset=reader.pos,
            details={"codeword_t": t, "blocks": len(blocks)},
        )


def _check_consumed(reader: BitReader) -> None:
    if reader.remaining:
        raise CodecError("Trailing bits after codeword body", offset=reader.pos, details={"trailing": reader.remaining})


def encode_coarse(
    D: Decoder,
    blocks: Sequence[Instance],
    truths: Sequence[BitVector],
    predictions: Optional[Sequence[BitVector]] = None,
) -> Tuple[Codeword, DescriptionLedger]:
    """Header, rank of the correct set S, then the missed witnesses verbatim."""
    _check_lengths(blocks, truths)
    t = len(blocks)
    preds = list(predictions) if predictions is not None else D.predict([b.public() for b in blocks])
    correct = [j for j in range(t) if preds[j] == truths[j]]
    rank = binomial_rank(correct, t)
    nbytes = (rank.bit_length() + 7) // 8

    out = bitarray(endian="big")
    identity, seed = _write_header(out, COARSE_MAGIC, D, t)
    write_gamma(out, len(correct) + 1)
    write_gamma(out, nbytes + 1)
    write_uint(out, rank, 8 * nbytes)
    correct_set = set(correct)
    missed = [j for j in range(t) if j not in correct_set]
    for j in missed:
        out.extend(truths[j].bits())

    m = blocks[0].m if blocks else 0
    ledger = DescriptionLedger(
        identity_bits=identity,
        seed_bits=seed,
        control_bits=CONTROL_HEADER_BITS
        + gamma_length(t + 1)
        + gamma_length(len(correct) + 1)
        + gamma_length(nbytes + 1),
        payload_bits=8 * nbytes + len(missed) * m,
    )
    if ledger.total != len(out):
        raise CodecError("Coarse ledger disagrees with the emitted length", details={"ledger": ledger.total, "bits": len(out)})
    return Codeword(out), ledger


def decode_coarse(codeword: Codeword, blocks: Sequence[Instance], registry: DecoderRegistry) -> List[BitVector]:
    """Rerun the named decoder and patch the blocks outside S.

    Raises:
        CodecError: malformed or truncated codeword
        UnknownDecoderError: identity not in the registry
    """
    reader = BitReader(codeword.bits)
    D, t = _read_header(reader, COARSE_MAGIC, registry)
    _check_t(t, blocks, reader)
    s = reader.read_gamma() - 1
    nbytes = reader.read_gamma() - 1
    rank = reader.read_uint(8 * nbytes)
    if s > t:
        raise CodecError("Correct-set size exceeds t", offset=reader.pos)
    try:
        correct = set(binomial_unrank(t, s, rank))
    except RankOutOfRangeError as exc:
        raise CodecError("Rank of the correct set is out of range", offset=reader.pos) from exc
    preds = D.predict([b.public() for b in blocks])
    out = []
    for j, inst in enumerate(blocks):
        if j in correct:
            out.append(preds[j])
        else:
            out.append(BitVector(_read_lsb_first(reader, inst.m), inst.m))
    _check_consumed(reader)
    return out


def _read_lsb_first(reader: BitReader, m: int) -> int:
    word = 0
    for i in range(m):
        word |= reader.read_uint(1) << i
    return word


def encode_fine(
    D: Decoder,
    blocks: Sequence[Instance],
    truths: Sequence[BitVector],
    predictions: Optional[Sequence[BitVector]] = None,
) -> Tuple[Codeword, DescriptionLedger]:
    """Header, then per block gamma(|E_j| + 1) and the rank of E_j in fixed width."""
    _check_lengths(blocks, truths)
    t = len(blocks)
    preds = list(predictions) if predictions is not None else D.predict([b.public() for b in blocks])
    mask = ErrorMask.from_predictions(preds, truths)

    out = bitarray(endian="big")
    identity, seed = _write_header(out, FINE_MAGIC, D, t)
    control = CONTROL_HEADER_BITS + gamma_length(t + 1)
    payload = 0
    for j, inst in enumerate(blocks):
        positions = mask.positions(j)
        e = len(positions)
        width = ceil_log2_comb(inst.m, e)
        write_gamma(out, e + 1)
        write_uint(out, binomial_rank(positions, inst.m), width)
        control += gamma_length(e + 1)
        payload += width

    ledger = DescriptionLedger(identity_bits=identity, seed_bits=seed, control_bits=control, payload_bits=payload)
    if ledger.total != len(out):
        raise CodecError("Fine ledger disagrees with the emitted length", details={"ledger": ledger.total, "bits": len(out)})
    return Codeword(out), ledger


def decode_fine(codeword: Codeword, blocks: Sequence[Instance], registry: DecoderRegistry) -> List[BitVector]:
    reader = BitReader(codeword.bits)
    D, t = _read_header(reader, FINE_MAGIC, registry)
    _check_t(t, blocks, reader)
    masks = []
    for inst in blocks:
        e = reader.read_gamma() - 1
        if e > inst.m:
            raise CodecError("Error weight exceeds m", offset=reader.pos, details={"weight": e, "m": inst.m})
        rank = reader.read_uint(ceil_log2_comb(inst.m, e))
        try:
            positions = binomial_unrank(inst.m, e, rank)
        except RankOutOfRangeError as exc:
            raise CodecError("Error-mask rank out of range", offset=reader.pos) from exc
        masks.append(BitVector.from_bits([1 if i in positions else 0 for i in range(inst.m)]))
    _check_consumed(reader)
    preds = D.predict([b.public() for b in blocks])
    return ErrorMask(blocks[0].m if blocks else 0, tuple(masks)).apply(preds)


def coarse_bound(L: int, t: int, correct: int, m: int) -> int:
    """L + ceil(log2 C(t, |S|)) + (t - |S|) m + header allowance."""
    return L + ceil_log2_comb(t, correct) + (t - correct) * m + header_allowance(t)


def fine_bound(L: int, t: int, weights: Sequence[int], m: int) -> int:
    """L + header allowance + sum ceil(log2 C(m, |E_j|)) + sum gamma(|E_j| + 1)."""
    return L + header_allowance(t) + sum(ceil_log2_comb(m, e) + gamma_length(e + 1) for e in weights)


def fine_entropy_bound(L: int, t: int, weights: Sequence[int], m: int) -> float:
    """Entropy form: sum m H2(|E_j| / m) in place of the exact binomial logs."""
    return (
        L
        + header_allowance(t)
        + sum(m * binary_entropy(e / m) + gamma_length(e + 1) for e in weights)
        + BOUND_EPSILON
    )


class AuditRow(BaseModel):
    run: int
    pattern: str
    t: int
    m: int
    correct_blocks: int
    error_weight: int
    description_bits: int
    coarse_total: int
    coarse_bound: int
    coarse_within_bound: bool
    fine_total: int
    fine_bound: int
    fine_entropy_bound: float
    fine_within_bound: bool
    round_trip: bool
    label: str


def audit(
    D: Decoder,
    blocks: Sequence[Instance],
    truths: Sequence[BitVector],
    registry: DecoderRegistry,
    run: int = 0,
    pattern: str = "sampled",
    predictions: Optional[Sequence[BitVector]] = None,
) -> AuditRow:
    """Encode with both codecs, decode, and compare each ledger with its bound."""
    preds = list(predictions) if predictions is not None else D.predict([b.public() for b in blocks])
    coarse_word, coarse_ledger = encode_coarse(D, blocks, truths, preds)
    fine_word, fine_ledger = encode_fine(D, blocks, truths, preds)
    mask = ErrorMask.from_predictions(preds, truths)
    t, m = len(blocks), blocks[0].m
    L = coarse_ledger.description_bits
    correct = len(mask.correct_blocks())
    weights = mask.weights()
    c_bound = coarse_bound(L, t, correct, m)
    f_bound = fine_bound(L, t, weights, m)
    f_entropy = fine_entropy_bound(L, t, weights, m)
    round_trip = (
        decode_coarse(coarse_word, blocks, registry) == list(truths)
        and decode_fine(fine_word, blocks, registry) == list(truths)
    )
    return AuditRow(
        run=run,
        pattern=pattern,
        t=t,
        m=m,
        correct_blocks=correct,
        error_weight=sum(weights),
        description_bits=L,
        coarse_total=coarse_ledger.total,
        coarse_bound=c_bound,
        coarse_within_bound=coarse_ledger.total <= c_bound,
        fine_total=fine_ledger.total,
        fine_bound=f_bound,
        fine_entropy_bound=f_entropy,
        fine_within_bound=fine_ledger.total <= f_bound and fine_ledger.total <= f_entropy,
        round_trip=round_trip,
        label=coarse_ledger.label,
    )


ADVERSARIAL_PATTERNS = (
    "all-right",
    "all-wrong",
    "single-bit",
    "alternating",
    "first-only",
    "last-only",
    "full-weight",
)


def adversarial_truths(predictions: Sequence[BitVector], pattern: str, rng: Rng) -> List[BitVector]:
    """Truths that differ from the predictions by a hand-built error pattern.

    all-wrong flips one uniform bit in every block; full-weight flips every bit
    of every block; first-only and last-only flip one uniform bit of a single block.
    """
    t = len(predictions)
    if t == 0:
        return []
    m = predictions[0].length
    masks = [BitVector.zeros(m) for _ in range(t)]
    if pattern == "all-right":
        pass
    elif pattern == "all-wrong":
        masks = [BitVector.unit(m, rng.integer(0, m)) for _ in range(t)]
    elif pattern == "single-bit":
        masks[0] = BitVector.unit(m, 0)
    elif pattern == "alternating":
        masks = [BitVector.ones(m) if j % 2 else BitVector.zeros(m) for j in range(t)]
    elif pattern == "first-only":
        masks[0] = BitVector.unit(m, rng.integer(0, m))
    elif pattern == "last-only":
        masks[-1] = BitVector.unit(m, rng.integer(0, m))
    elif pattern == "full-weight":
        masks = [BitVector.ones(m) for _ in range(t)]
    else:
        raise ValueError(f"Unknown error pattern '{pattern}'; expected one of {ADVERSARIAL_PATTERNS}")
    return [p ^ mask for p, mask in zip(predictions, masks)]


class ClashPoint(BaseModel):
    """Per-t means over tuples. Patched bits are description plus payload; control is wrapper overhead."""

    t: int
    n_tuples: int
    mean_ledger_bits: float
    mean_patched_bits: float
    mean_control_bits: float
    mean_payload_bits: float
    patched_spread: int = Field(description="max - min patched bits over the tuples at this t")
    tuple_success: float


class ClashCurve(BaseModel):
    decoder: str
    codec: str
    points: List[ClashPoint]
    slope_bits_per_block: float
    intercept: float
    r_value: float


def _fit(points: List[ClashPoint]) -> Tuple[float, float, float]:
    if len(points) < 2:
        return 0.0, points[0].mean_patched_bits if points else 0.0, 0.0
    ts = np.array([p.t for p in points], dtype=float)
    bits = np.array([p.mean_patched_bits for p in points], dtype=float)
    if np.all(bits == bits[0]):
        return 0.0, float(bits[0]), 0.0
    fit = stats.linregress(ts, bits)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue)


def clash_curve(
    D: Decoder,
    params: EnsembleParams,
    t_values: Sequence[int],
    n_tuples: int,
    rng: Rng,
    workers: int = 1,
) -> ClashCurve:
    """Measured fine-codec ledger per t for a decoder; the slope is fitted on patched bits per block."""
    points = []
    for t in t_values:
        totals, patched, controls, payloads, successes = [], [], [], [], 0
        for n in range(n_tuples):
            blocks = sample_tuple(t, params, rng.substream("clash", t, n), workers) if t else []
            instances = [b.instance.public() for b in blocks]
            truths = [b.witness.x for b in blocks]
            preds = D.predict(instances)
            _, ledger = encode_fine(D, instances, truths, preds)
            totals.append(ledger.total)
            patched.append(ledger.description_bits + ledger.payload_bits)
            controls.append(ledger.control_bits)
            payloads.append(ledger.payload_bits)
            successes += int(all(p == x for p, x in zip(preds, truths)))
        points.append(
            ClashPoint(
                t=t,
                n_tuples=n_tuples,
                mean_ledger_bits=float(np.mean(totals)),
                mean_patched_bits=float(np.mean(patched)),
                mean_control_bits=float(np.mean(controls)),
                mean_payload_bits=float(np.mean(payloads)),
                patched_spread=int(max(patched) - min(patched)),
                tuple_success=successes / n_tuples,
            )
        )
    slope, intercept, r_value = _fit(points)
    logger.info("Clash curve fitted", decoder=D.identifier, slope=slope, points=len(points))
    return ClashCurve(
        decoder=D.identifier,
        codec="fine",
        points=points,
        slope_bits_per_block=slope,
        intercept=intercept,
        r_value=r_value,
    )

"""
Sign-invariant local sketches.

The sketch z = feat(F^h) of a masked CNF reads only the unsigned, unlabeled
factor graph, so it is constant on the orbit of the mask group. Features:

- degree histogram: variables bucketed by degree on a log2 scale (bucket 0 is
  degree 0, bucket j >= 1 holds degrees in [2^(j-1), 2^j), the last bucket is
  open-ended), each bucket's share of variables quantized to 2 bits;
- pattern counts: the multiset of unsigned radius-rho rooted neighborhood codes
  with log2-coarsened multiplicities, digested and passed through a seeded
  Carter-Wegman hash ((a key + b) mod p) into the remaining bits;
- co-occurrence (off by default): log2-bucketed histogram of how often each
  variable pair shares a clause, digested into its own hashed field.

The concatenation is truncated to r_m = floor(c_z log2 m) bits.
"""

import hashlib
import math
from collections import Counter
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from .ensemble import Cnf, Mask, SignedCnf, apply_mask
from .factor_graph import build_factor_graph, canonical_code, extract_neighborhood
from .gf2 import BitVector
from .hashing import Rng

logger = structlog.get_logger().bind(component="sils")

MERSENNE_61 = (1 << 61) - 1


class SilsFeature(str, Enum):
    DEGREE_HISTOGRAM = "degree_histogram"
    PATTERN_COUNTS = "pattern_counts"
    COOCCURRENCE = "cooccurrence"


class SilsSpec(BaseModel):
    """Feature selection and constants of the sketch."""

    model_config = ConfigDict(frozen=True)

    features: List[SilsFeature] = Field(
        default=[SilsFeature.DEGREE_HISTOGRAM, SilsFeature.PATTERN_COUNTS],
        description="Enabled features, concatenated in this order",
    )
    rho: int = Field(default=1, ge=0, le=2, description="Radius of hashed pattern counts")
    c_z: float = Field(default=4.0, gt=0, description="Length constant: r_m = floor(c_z log2 m)")
    degree_buckets: int = Field(default=6, ge=1, description="Number of log2 degree buckets")
    quantization_bits: int = Field(default=2, ge=1, le=8, description="Bits per degree bucket")
    cooccurrence_bits: int = Field(default=4, ge=1, description="Bits of the co-occurrence field")
    hash_seed: int = Field(default=0x5115, ge=0, description="Seed of the pattern-count hash")

    def length_bound(self, m: int) -> int:
        return int(math.floor(self.c_z * math.log2(m))) if m > 1 else 0


class SilsVector(BaseModel):
    """A sketch value; `bits` is packed little-endian into an integer."""

    model_config = ConfigDict(frozen=True)

    bits: int
    r_m: int

    def to_bitvector(self) -> BitVector:
        return BitVector(self.bits, self.r_m)

    def hex(self) -> str:
        return self.to_bitvector().hex()


def _degree_bucket(degree: int, buckets: int) -> int:
    if degree == 0:
        return 0
    return min(buckets - 1, degree.bit_length())


def degree_histogram_bits(degrees: np.ndarray, spec: SilsSpec) -> BitVector:
    m = degrees.shape[0]
    counts = np.zeros(spec.degree_buckets, dtype=np.int64)
    for degree in degrees:
        counts[_degree_bucket(int(degree), spec.degree_buckets)] += 1
    levels = 1 << spec.quantization_bits
    word = 0
    for j, count in enumerate(counts):
        q = min(levels - 1, (int(count) * levels) // m)
        word |= q << (j * spec.quantization_bits)
    return BitVector(word, spec.degree_buckets * spec.quantization_bits)


@lru_cache(maxsize=None)
def _hash_coefficients(seed: int, label: str) -> Tuple[int, int]:
    stream = Rng(seed).substream("sils-hash", label)
    return stream.integer(1, MERSENNE_61), stream.integer(0, MERSENNE_61)


def carter_wegman(key: int, width: int, seed: int, label: str) -> int:
    """((a key + b) mod p) mod 2^width with p = 2^61 - 1 and (a, b) drawn from the seed."""
    a, b = _hash_coefficients(seed, label)
    return ((a * (key % MERSENNE_61) + b) % MERSENNE_61) & ((1 << width) - 1)


def _digest(parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    return int.from_bytes(h.digest(), "little")


def pattern_count_key(F: SignedCnf, rho: int) -> int:
    """64-bit digest of the unsigned rooted-pattern multiset."""
    G = build_factor_graph(F)
    codes = Counter(
        canonical_code(extract_neighborhood(G, i, rho), signed=False) for i in range(F.m)
    )
    coarse = sorted(code + b"#" + bytes([count.bit_length()]) for code, count in codes.items())
    return _digest(coarse)


def cooccurrence_key(F: SignedCnf) -> int:
    """Digest of the log2-bucketed histogram of pair co-occurrence counts."""
    pairs: Counter = Counter()
    for clause in F.variables:
        a, b, c = sorted(int(v) for v in clause)
        pairs[(a, b)] += 1
        pairs[(a, c)] += 1
        pairs[(b, c)] += 1
    histogram = Counter(count.bit_length() for count in pairs.values())
    return _digest([f"{bucket}:{n}".encode("ascii") for bucket, n in sorted(histogram.items())])


def extract_sils(F: SignedCnf, spec: SilsSpec) -> SilsVector:
    """Sketch of F; reads no literal signs and no variable labels."""
    r_m = spec.length_bound(F.m)
    parts: List[BitVector] = []
    degrees = np.bincount(F.variables.reshape(-1), minlength=F.m)
    for position, feature in enumerate(spec.features):
        used = sum(p.length for p in parts)
        remaining = max(0, r_m - used)
        if feature is SilsFeature.DEGREE_HISTOGRAM:
            parts.append(degree_histogram_bits(degrees, spec))
        elif feature is SilsFeature.PATTERN_COUNTS:
            reserve = 0
            if SilsFeature.COOCCURRENCE in spec.features[position + 1 :]:
                reserve = spec.cooccurrence_bits
            width = max(0, remaining - reserve)
            if width:
                key = pattern_count_key(F, spec.rho)
                parts.append(BitVector(carter_wegman(key, width, spec.hash_seed, "patterns"), width))
        elif feature is SilsFeature.COOCCURRENCE:
            width = min(spec.cooccurrence_bits, remaining)
            if width:
                key = cooccurrence_key(F)
                parts.append(BitVector(carter_wegman(key, width, spec.hash_seed, "cooccurrence"), width))
    combined = BitVector.zeros(0)
    for part in parts:
        combined = combined.concat(part)
    # truncation keeps the sketch within floor(c_z log2 m) bits
    length = min(combined.length, r_m)
    word = combined.word & ((1 << length) - 1)
    return SilsVector(bits=word, r_m=length)


SketchExtractor = Callable[[SignedCnf, SilsSpec], SilsVector]


class InvarianceResult(BaseModel):
    passed: bool
    n_masks: int
    distinct_values: int
    reference_hex: str


def check_invariance(
    F: Cnf,
    spec: SilsSpec,
    n_masks: int,
    rng: Rng,
    extractor: Optional[SketchExtractor] = None,
) -> InvarianceResult:
    """Extract the sketch under n_masks random masks; pass iff all agree.

    `extractor` replaces extract_sils (used to plant a sign-sensitive feature).
    """
    extract = extractor or extract_sils
    values = set()
    reference = None
    for r in range(n_masks):
        h = Mask.sample(F.m, rng.substream("invariance", r))
        z = extract(apply_mask(F, h), spec)
        if reference is None:
            reference = z
        values.add((z.bits, z.r_m))
    passed = len(values) <= 1
    if not passed:
        logger.info("Sketch varies across masks", m=F.m, distinct=len(values))
    return InvarianceResult(
        passed=passed,
        n_masks=n_masks,
        distinct_values=len(values),
        reference_hex=reference.hex() if reference is not None else "",
    )

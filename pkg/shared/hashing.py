"""
Seeded randomness families.

Three samplers back the block ensemble and the symmetrization wrapper:
uniform parity matrices (the 2-universal linear hash), right-hand sides that
are either uniform or delta-biased, and kappa-wise independent sign-flip
vectors. Every sampler is a pure function of its parameters and an `Rng`,
which wraps numpy's counter-based Philox generator keyed by (seed, stream).
"""

import hashlib
import math
import struct
from enum import Enum
from typing import Optional

import numpy as np
import structlog

from .gf2 import BitMatrix, BitVector, parity
from .gf2m import MAX_WIDTH, GF2m

logger = structlog.get_logger().bind(component="hashing")

SEED_MASK = (1 << 64) - 1


class Rng:
    """Philox generator keyed by a 64-bit seed and a 64-bit stream id.

    Identical (seed, stream) pairs reproduce identical sequences on every
    platform. Child streams are derived with `substream`, never by sharing a
    generator between independent trials.
    """

    ALGORITHM = "philox4x64"

    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= seed <= SEED_MASK:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= stream <= SEED_MASK:
            raise ValueError(f"Stream must be a 64-bit unsigned integer, got {stream}")
        self.seed = seed
        self.stream = stream
        self._generator: Optional[np.random.Generator] = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            key = self.seed | (self.stream << 64)
            self._generator = np.random.Generator(np.random.Philox(key=key))
        return self._generator

    def substream(self, *labels) -> "Rng":
        """Derive an independent child stream from this stream and the labels."""
        digest = hashlib.blake2b(digest_size=8)
        digest.update(struct.pack("<QQ", self.seed, self.stream))
        for label in labels:
            digest.update(b"\x1f" + repr(label).encode("utf-8"))
        child = int.from_bytes(digest.digest(), "little")
        return Rng(self.seed, child)

    def bits(self, n: int) -> BitVector:
        """n i.i.d. fair bits."""
        if n == 0:
            return BitVector.zeros(0)
        raw = self.generator.integers(0, 2, size=n, dtype=np.uint8)
        return BitVector(words_from_bits(raw[None, :])[0], n)

    def word(self, width: int) -> int:
        """Uniform integer in [0, 2^width)."""
        nbytes = (width + 7) // 8
        value = int.from_bytes(self.generator.bytes(nbytes), "little")
        return value & ((1 << width) - 1)

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return int(self.generator.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed:#x}, stream={self.stream:#x})"


def words_from_bits(bits: np.ndarray) -> list:
    """Pack each row of a 0/1 array into an integer (column j -> bit j)."""
    bits = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


class BMode(str, Enum):
    """Right-hand side distribution."""

    UNIFORM = "uniform"
    DELTA_BIASED = "delta_biased"


def sample_parity_matrix(k: int, m: int, rng: Rng) -> BitMatrix:
    """Uniform k x m parity matrix (rows independent and uniform).

    k = 0 is accepted and yields the empty matrix (the trivial hash used when
    the isolation layer draws k = 0).
    """
    if k < 0 or m < 1:
        raise ValueError(f"Parity matrix needs k >= 0 and m >= 1, got k={k}, m={m}")
    if k == 0:
        return BitMatrix([], m)
    raw = rng.generator.integers(0, 2, size=(k, m), dtype=np.uint8)
    return BitMatrix([BitVector(word, m) for word in words_from_bits(raw)], m)


def small_bias_width(k: int, delta: float) -> int:
    """Field width for the powering construction with bias at most delta."""
    width = max(1, math.ceil(math.log2(max(k - 1, 1) / delta)))
    if width > MAX_WIDTH:
        raise ValueError(f"delta={delta} needs a field wider than {MAX_WIDTH} bits")
    return width


def sample_rhs(
    k: int, mode: BMode, rng: Rng, delta: Optional[float] = None
) -> BitVector:
    """Right-hand side b of length k.

    Args:
        k: length of b
        mode: uniform fair bits, or a delta-biased vector
        rng: random stream
        delta: bias bound for the delta-biased mode, in (0, 1)

    Returns:
        BitVector of length k. In delta-biased mode b_i = <x^i, y> for uniform
        field elements x, y of GF(2^w), so every nonzero parity of b has bias
        at most (k - 1) / 2^w <= delta. The seed is the 2w bits of (x, y).
    """
    mode = BMode(mode)
    if mode is BMode.UNIFORM:
        return rng.bits(k)
    if delta is None or not 0 < delta < 1:
        raise ValueError(f"delta-biased mode needs delta in (0, 1), got {delta}")
    if k == 0:
        return BitVector.zeros(0)
    width = small_bias_width(k, delta)
    field = _field(width)
    x = rng.word(width)
    y = rng.word(width)
    word = 0
    power = 1
    for i in range(k):
        if parity(power & y):
            word |= 1 << i
        power = field.mul(power, x)
    return BitVector(word, k)


_FIELDS = {}


def _field(width: int) -> GF2m:
    field = _FIELDS.get(width)
    if field is None:
        field = GF2m(width)
        _FIELDS[width] = field
    return field


class SignFlipFamily:
    """kappa-wise independent sign-flip vectors sigma: [m] -> {0, 1}.

    Draw r evaluates a uniformly random polynomial of degree kappa - 1 over
    GF(2^w), 2^w >= m, at the points 0..m-1 and keeps the low bit of each
    value. Coefficients for draw r come from the substream ("sign-flip", r) of
    the family's seed, so draws are mutually independent.
    """

    def __init__(self, kappa: int, m: int, rng: Rng):
        if kappa < 1 or m < 1:
            raise ValueError(f"SignFlipFamily needs kappa >= 1 and m >= 1, got {kappa}, {m}")
        self.kappa = kappa
        self.m = m
        self.field_width = max(1, math.ceil(math.log2(m)))
        self.rng = rng
        self._field = _field(self.field_width)
        self._powers = None
        if self._field.has_tables:
            self._powers = self._field.powers(np.arange(m), kappa)

    def coefficients(self, r: int) -> np.ndarray:
        stream = self.rng.substream("sign-flip", r)
        return stream.generator.integers(
            0, 1 << self.field_width, size=self.kappa, dtype=np.int64
        )

    def seed_bits(self, draws: int) -> int:
        """Description length of `draws` hard-wired draws, in bits."""
        return draws * self.kappa * self.field_width

    def evaluate(self, coefficients: np.ndarray) -> np.ndarray:
        if self._powers is not None:
            products = self._field.mul_arrays(coefficients[:, None], self._powers)
            return np.bitwise_xor.reduce(products, axis=0)
        values = np.zeros(self.m, dtype=object)
        for point in range(self.m):
            acc = 0
            for c in coefficients[::-1]:
                acc = self._field.mul(acc, point) ^ int(c)
            values[point] = acc
        return values


def draw_sign_flip(family: SignFlipFamily, r: int) -> BitVector:
    """The r-th sign-flip vector sigma^(r) of the family."""
    values = family.evaluate(family.coefficients(r))
    word = 0
    for point, value in enumerate(values):
        if int(value) & 1:
            word |= 1 << point
    return BitVector(word, family.m)


def default_symmetrization_draws(m: int, t: int) -> int:
    """ceil(20 log2(m t)), bumped to the next odd number so majorities never tie."""
    s = max(1, math.ceil(20 * math.log2(max(m * t, 1))))
    return s if s % 2 == 1 else s + 1


def default_kappa(m: int, t: int) -> int:
    """ceil(12 log2(m t)), at least 2."""
    return max(2, math.ceil(12 * math.log2(max(m * t, 1))))

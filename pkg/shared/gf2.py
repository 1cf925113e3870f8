"""
Bit vectors and matrices over GF(2).

Vectors are packed into a single Python integer (bit i of the word is
coordinate i) and are immutable, so they can be shared freely between
workers. Only the operations the isolation layer and the back-maps need are
provided: matrix-vector products, columns, inner products and affine solving.

Serialization: a 32-bit little-endian length followed by the packed bits,
little-endian bit order within bytes (coordinate 0 is the lowest bit of the
first byte).
"""

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import CodecError, DimensionMismatchError, IndexOutOfRangeError


class BitVector:
    """Fixed-length immutable vector over GF(2)."""

    __slots__ = ("_word", "_length")

    def __init__(self, word: int, length: int):
        if length < 0:
            raise ValueError("BitVector length must be non-negative")
        if word < 0 or word >> length:
            raise ValueError(f"Word does not fit in {length} bits")
        object.__setattr__(self, "_word", int(word))
        object.__setattr__(self, "_length", int(length))

    def __setattr__(self, name, value):
        raise AttributeError("BitVector is immutable")

    def __reduce__(self):
        return (BitVector, (self._word, self._length))

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls((1 << length) - 1, length)

    @classmethod
    def unit(cls, length: int, index: int) -> "BitVector":
        """The standard basis vector e_index."""
        if not 0 <= index < length:
            raise IndexOutOfRangeError(index, length)
        return cls(1 << index, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        word = 0
        length = 0
        for position, bit in enumerate(bits):
            if bit not in (0, 1, True, False):
                raise ValueError(f"Bit at position {position} is not 0/1: {bit!r}")
            if bit:
                word |= 1 << position
            length = position + 1
        return cls(word, length)

    @classmethod
    def from_numpy(cls, array: np.ndarray) -> "BitVector":
        return cls.from_bits(int(v) & 1 for v in np.asarray(array).ravel())

    @property
    def word(self) -> int:
        return self._word

    @property
    def length(self) -> int:
        return self._length

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self._length:
            raise IndexOutOfRangeError(index, self._length)
        return (self._word >> index) & 1

    def __iter__(self) -> Iterator[int]:
        word = self._word
        for _ in range(self._length):
            yield word & 1
            word >>= 1

    def _check_length(self, other: "BitVector") -> None:
        if self._length != other._length:
            raise DimensionMismatchError(
                "BitVector lengths differ",
                expected=self._length,
                actual=other._length,
            )

    def __xor__(self, other: "BitVector") -> "BitVector":
        self._check_length(other)
        return BitVector(self._word ^ other._word, self._length)

    def __and__(self, other: "BitVector") -> "BitVector":
        self._check_length(other)
        return BitVector(self._word & other._word, self._length)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._length == other._length and self._word == other._word

    def __hash__(self) -> int:
        return hash((self._word, self._length))

    def __repr__(self) -> str:
        bits = "".join(str(b) for b in self)
        return f"BitVector({bits or '-'})"

    def weight(self) -> int:
        return self._word.bit_count()

    def flip(self, index: int) -> "BitVector":
        if not 0 <= index < self._length:
            raise IndexOutOfRangeError(index, self._length)
        return BitVector(self._word ^ (1 << index), self._length)

    def bits(self) -> Tuple[int, ...]:
        return tuple(self)

    def support(self) -> List[int]:
        """Indices of the set coordinates, ascending."""
        return [i for i, bit in enumerate(self) if bit]

    def concat(self, other: "BitVector") -> "BitVector":
        return BitVector(self._word | (other._word << self._length), self._length + other._length)

    def to_numpy(self) -> np.ndarray:
        return np.fromiter(self, dtype=np.uint8, count=self._length)

    def packed(self) -> bytes:
        return self._word.to_bytes((self._length + 7) // 8, "little")

    def to_bytes(self) -> bytes:
        return struct.pack("<I", self._length) + self.packed()

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> Tuple["BitVector", int]:
        """Parse a serialized vector; returns the vector and the next offset."""
        if len(data) < offset + 4:
            raise CodecError("Truncated BitVector length prefix", offset=offset * 8)
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        nbytes = (length + 7) // 8
        if len(data) < offset + nbytes:
            raise CodecError("Truncated BitVector payload", offset=offset * 8)
        word = int.from_bytes(data[offset : offset + nbytes], "little")
        if word >> length:
            raise CodecError("Padding bits set in BitVector payload", offset=offset * 8)
        return cls(word, length), offset + nbytes

    def hex(self) -> str:
        return self.packed().hex()


def parity(word: int) -> int:
    return word.bit_count() & 1


class BitMatrix:
    """k x m matrix over GF(2) stored as k row vectors of length m."""

    __slots__ = ("_rows", "_k", "_m")

    def __init__(self, rows: Sequence[BitVector], m: int):
        rows = tuple(rows)
        for r, row in enumerate(rows):
            if row.length != m:
                raise DimensionMismatchError(
                    f"Row {r} has length {row.length}, expected {m}",
                    expected=m,
                    actual=row.length,
                )
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_k", len(rows))
        object.__setattr__(self, "_m", m)

    def __setattr__(self, name, value):
        raise AttributeError("BitMatrix is immutable")

    def __reduce__(self):
        return (BitMatrix, (self._rows, self._m))

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], m: Optional[int] = None) -> "BitMatrix":
        vectors = [BitVector.from_bits(row) for row in rows]
        if m is None:
            if not vectors:
                raise ValueError("Column count required for an empty matrix")
            m = vectors[0].length
        return cls(vectors, m)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls([BitVector.unit(n, i) for i in range(n)], n)

    @classmethod
    def zeros(cls, k: int, m: int) -> "BitMatrix":
        return cls([BitVector.zeros(m) for _ in range(k)], m)

    @classmethod
    def from_numpy(cls, array: np.ndarray) -> "BitMatrix":
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError("BitMatrix.from_numpy expects a 2-D array")
        return cls([BitVector.from_numpy(row) for row in array], array.shape[1])

    @property
    def rows(self) -> Tuple[BitVector, ...]:
        return self._rows

    @property
    def k(self) -> int:
        return self._k

    @property
    def m(self) -> int:
        return self._m

    def row_words(self) -> List[int]:
        return [row.word for row in self._rows]

    def append_row(self, row: BitVector) -> "BitMatrix":
        return BitMatrix(self._rows + (row,), self._m)

    def to_numpy(self) -> np.ndarray:
        if self._k == 0:
            return np.zeros((0, self._m), dtype=np.uint8)
        return np.stack([row.to_numpy() for row in self._rows])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self._m == other._m and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._rows, self._m))

    def __repr__(self) -> str:
        return f"BitMatrix(k={self._k}, m={self._m})"

    def to_bytes(self) -> bytes:
        out = bytearray(struct.pack("<II", self._k, self._m))
        for row in self._rows:
            out += row.packed()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> Tuple["BitMatrix", int]:
        if len(data) < offset + 8:
            raise CodecError("Truncated BitMatrix header", offset=offset * 8)
        k, m = struct.unpack_from("<II", data, offset)
        offset += 8
        nbytes = (m + 7) // 8
        rows = []
        for _ in range(k):
            if len(data) < offset + nbytes:
                raise CodecError("Truncated BitMatrix row", offset=offset * 8)
            word = int.from_bytes(data[offset : offset + nbytes], "little")
            if word >> m:
                raise CodecError("Padding bits set in BitMatrix row", offset=offset * 8)
            rows.append(BitVector(word, m))
            offset += nbytes
        return cls(rows, m), offset


def mat_vec_mul(A: BitMatrix, x: BitVector) -> BitVector:
    """Return Ax over GF(2)."""
    if x.length != A.m:
        raise DimensionMismatchError(
            "Vector length does not match matrix column count",
            expected=A.m,
            actual=x.length,
        )
    word = 0
    for r, row in enumerate(A.rows):
        if parity(row.word & x.word):
            word |= 1 << r
    return BitVector(word, A.k)


def column(A: BitMatrix, i: int) -> BitVector:
    """Return a_i = A e_i."""
    if not 0 <= i < A.m:
        raise IndexOutOfRangeError(i, A.m)
    word = 0
    for r, row in enumerate(A.rows):
        if (row.word >> i) & 1:
            word |= 1 << r
    return BitVector(word, A.k)


def inner_product(u: BitVector, v: BitVector) -> int:
    """Parity of the bitwise AND."""
    if u.length != v.length:
        raise DimensionMismatchError(
            "Inner product of vectors with different lengths",
            expected=u.length,
            actual=v.length,
        )
    return parity(u.word & v.word)


@dataclass(frozen=True)
class AffineCoset:
    """Solution set {x : Ax = b} = particular + span(null_basis), or empty."""

    m: int
    rank: int
    particular: Optional[BitVector]
    null_basis: Tuple[BitVector, ...]

    @property
    def is_consistent(self) -> bool:
        return self.particular is not None

    @property
    def dimension(self) -> int:
        return len(self.null_basis)

    def size(self) -> int:
        return (1 << self.dimension) if self.is_consistent else 0

    def contains(self, x: BitVector) -> bool:
        if not self.is_consistent:
            return False
        # reduce x + particular against the pivot-normalised basis
        residual = (x ^ self.particular).word
        for vector in self.null_basis:
            pivot = vector.word.bit_length() - 1
            if (residual >> pivot) & 1:
                residual ^= vector.word
        return residual == 0

    def members(self) -> Iterator[BitVector]:
        """All coset members in Gray-code order."""
        if not self.is_consistent:
            return
        current = self.particular.word
        yield BitVector(current, self.m)
        basis = [v.word for v in self.null_basis]
        for step in range(1, 1 << len(basis)):
            flip = (step & -step).bit_length() - 1
            current ^= basis[flip]
            yield BitVector(current, self.m)

    def members_array(self) -> np.ndarray:
        """All coset members as packed uint64 words (requires m <= 64)."""
        if self.m > 64:
            raise DimensionMismatchError(
                "Packed enumeration supports at most 64 variables",
                expected=64,
                actual=self.m,
            )
        chunks = list(self.member_chunks())
        if not chunks:
            return np.zeros(0, dtype=np.uint64)
        return np.concatenate(chunks)

    def member_chunks(self, chunk_dim: int = 14) -> Iterator[np.ndarray]:
        """Coset members as packed uint64 arrays of at most 2^chunk_dim entries."""
        if self.m > 64:
            raise DimensionMismatchError(
                "Packed enumeration supports at most 64 variables",
                expected=64,
                actual=self.m,
            )
        if not self.is_consistent:
            return
        low = self.null_basis[:chunk_dim]
        high = [np.uint64(v.word) for v in self.null_basis[chunk_dim:]]
        block = np.array([self.particular.word], dtype=np.uint64)
        for vector in low:
            block = np.concatenate([block, block ^ np.uint64(vector.word)])
        offset = np.uint64(0)
        yield block
        for step in range(1, 1 << len(high)):
            flip = (step & -step).bit_length() - 1
            offset ^= high[flip]
            yield block ^ offset


def gaussian_affine_solve(A: BitMatrix, b: BitVector) -> AffineCoset:
    """Solve Ax = b by Gauss-Jordan elimination over GF(2).

    Args:
        A: k x m coefficient matrix
        b: right-hand side of length k

    Returns:
        AffineCoset with rank, one particular solution (None when the system is
        inconsistent) and a basis of the null space of A. Each null-space basis
        vector has a distinct highest set bit at a free column.

    Raises:
        DimensionMismatchError: if b does not have length k
    """
    if b.length != A.k:
        raise DimensionMismatchError(
            "Right-hand side length does not match matrix row count",
            expected=A.k,
            actual=b.length,
        )
    m = A.m
    # augmented rows: bits [0, m) coefficients, bit m the right-hand side
    rows = [row.word | (((b.word >> r) & 1) << m) for r, row in enumerate(A.rows)]
    pivots: List[int] = []
    pivot_row = 0
    for col in range(m):
        found = None
        for r in range(pivot_row, len(rows)):
            if (rows[r] >> col) & 1:
                found = r
                break
        if found is None:
            continue
        rows[pivot_row], rows[found] = rows[found], rows[pivot_row]
        for r in range(len(rows)):
            if r != pivot_row and (rows[r] >> col) & 1:
                rows[r] ^= rows[pivot_row]
        pivots.append(col)
        pivot_row += 1
        if pivot_row == len(rows):
            break

    rank = len(pivots)
    consistent = all(rows[r] != (1 << m) for r in range(rank, len(rows)))
    free_columns = [c for c in range(m) if c not in set(pivots)]

    basis = []
    for free in free_columns:
        word = 1 << free
        for r, col in enumerate(pivots):
            if (rows[r] >> free) & 1:
                word |= 1 << col
        basis.append(BitVector(word, m))

    particular = None
    if consistent:
        word = 0
        for r, col in enumerate(pivots):
            if (rows[r] >> m) & 1:
                word |= 1 << col
        particular = BitVector(word, m)

    return AffineCoset(m=m, rank=rank, particular=particular, null_basis=tuple(basis))

"""
The masked-and-isolated block ensemble.

A block is sampled in four steps: a random unsigned 3-CNF with floor(alpha m)
clauses, a uniformly random mask (variable permutation plus sign flips)
applied to the all-positive formula, an XOR layer Ax = b, and rejection until
the whole instance has exactly one solution. Solution counting enumerates the
affine coset {x : Ax = b} and tests the CNF on every member, vectorized over
packed uint64 assignments.

Conventions: variables are 0-based, a literal is (variable, negation bit) and
is true under x iff x[variable] != negation bit.
"""

import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import (
    BudgetExceededError,
    CodecError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    TrialLimitError,
    UnsatisfiableError,
)
from .gf2 import (
    AffineCoset,
    BitMatrix,
    BitVector,
    gaussian_affine_solve,
    mat_vec_mul,
)
from .hashing import BMode, Rng, sample_parity_matrix, sample_rhs
from .parallel import ordered_map

logger = structlog.get_logger().bind(component="ensemble")

INSTANCE_MAGIC = b"USAT"
INSTANCE_VERSION = 1
PACKED_LIMIT = 64


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


class KMode(str, Enum):
    """How the XOR-layer height k is chosen per rejection trial."""

    UNIFORM = "uniform"
    FIXED = "fixed"


class EnsembleParams(BaseModel):
    """Parameters of the block distribution."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(default=16, ge=1, description="Number of variables")
    alpha: float = Field(default=4.2, gt=0, description="Clause density M/m")
    c1: float = Field(default=1.0, gt=0, description="k = round(c1 log2 m) in fixed mode")
    c2: float = Field(default=10.0, gt=0, description="delta = m^(-c2) for biased b")
    c3: float = Field(default=0.5, gt=0, description="Radius r = round(c3 log2 m)")
    c4: float = Field(default=1.0, gt=0, description="Tuple length t = round(c4 m)")
    b_mode: BMode = Field(default=BMode.UNIFORM, description="Right-hand side distribution")
    k_mode: KMode = Field(default=KMode.UNIFORM, description="XOR height per trial")
    k: Optional[int] = Field(default=None, ge=0, description="Override for fixed k")
    trial_limit: int = Field(default=100_000, ge=1, description="Rejection trial limit")
    max_coset_dim: int = Field(default=26, ge=0, le=40, description="Enumeration budget")

    @property
    def clause_count(self) -> int:
        return int(math.floor(self.alpha * self.m))

    @property
    def fixed_k(self) -> int:
        if self.k is not None:
            return self.k
        return round_half_up(self.c1 * math.log2(self.m))

    @property
    def delta(self) -> float:
        return float(self.m) ** (-self.c2)

    @property
    def default_t(self) -> int:
        return max(1, round_half_up(self.c4 * self.m))

    @property
    def default_radius(self) -> int:
        return max(1, round_half_up(self.c3 * math.log2(self.m)))


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Cnf:
    """Unsigned 3-CNF: M clauses of 3 distinct variables each."""

    m: int
    clauses: np.ndarray

    def __post_init__(self):
        clauses = np.asarray(self.clauses, dtype=np.int64).reshape(-1, 3)
        if clauses.size and (clauses.min() < 0 or clauses.max() >= self.m):
            raise IndexOutOfRangeError(int(clauses.max()), self.m)
        if clauses.size and np.any(
            (clauses[:, 0] == clauses[:, 1])
            | (clauses[:, 0] == clauses[:, 2])
            | (clauses[:, 1] == clauses[:, 2])
        ):
            raise ValueError("Every clause needs 3 distinct variables")
        object.__setattr__(self, "clauses", _readonly(clauses.copy()))

    @property
    def M(self) -> int:
        return int(self.clauses.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cnf):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.clauses, other.clauses)

    def __hash__(self) -> int:
        return hash((self.m, self.clauses.tobytes()))


@dataclass(frozen=True, eq=False)
class Mask:
    """Mask group element h = (pi, sigma)."""

    pi: np.ndarray
    sigma: BitVector

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.int64)
        m = pi.shape[0]
        if not np.array_equal(np.sort(pi), np.arange(m)):
            raise ValueError("Mask permutation is not a bijection of [0, m)")
        if self.sigma.length != m:
            raise DimensionMismatchError(
                "Mask sign vector length differs from permutation size",
                expected=m,
                actual=self.sigma.length,
            )
        object.__setattr__(self, "pi", _readonly(pi.copy()))

    @property
    def m(self) -> int:
        return int(self.pi.shape[0])

    @classmethod
    def identity(cls, m: int) -> "Mask":
        return cls(np.arange(m), BitVector.zeros(m))

    @classmethod
    def sign_flip(cls, sigma: BitVector) -> "Mask":
        return cls(np.arange(sigma.length), sigma)

    @classmethod
    def sample(cls, m: int, rng: Rng) -> "Mask":
        return cls(rng.permutation(m), rng.bits(m))

    def compose(self, inner: "Mask") -> "Mask":
        """The element self * inner (apply inner first, then self)."""
        if inner.m != self.m:
            raise DimensionMismatchError("Mask sizes differ", expected=self.m, actual=inner.m)
        pi = self.pi[inner.pi]
        inverse = np.empty_like(self.pi)
        inverse[self.pi] = np.arange(self.m)
        inner_bits = inner.sigma.to_numpy()[inverse]
        sigma = BitVector.from_numpy(inner_bits ^ self.sigma.to_numpy())
        return Mask(pi, sigma)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return np.array_equal(self.pi, other.pi) and self.sigma == other.sigma

    def __hash__(self) -> int:
        return hash((self.pi.tobytes(), self.sigma))


@dataclass(frozen=True, eq=False)
class SignedCnf:
    """Signed 3-CNF: per clause three (variable, negation bit) literals."""

    m: int
    variables: np.ndarray
    negations: np.ndarray

    def __post_init__(self):
        variables = np.asarray(self.variables, dtype=np.int64).reshape(-1, 3)
        negations = np.asarray(self.negations, dtype=np.uint8).reshape(-1, 3)
        if variables.shape != negations.shape:
            raise DimensionMismatchError(
                "Literal variable and sign arrays differ in shape",
                expected=variables.shape[0],
                actual=negations.shape[0],
            )
        if variables.size and (variables.min() < 0 or variables.max() >= self.m):
            raise IndexOutOfRangeError(int(variables.max()), self.m)
        if negations.size and negations.max() > 1:
            raise ValueError("Negation bits must be 0 or 1")
        object.__setattr__(self, "variables", _readonly(variables.copy()))
        object.__setattr__(self, "negations", _readonly(negations.copy()))

    @classmethod
    def from_literals(cls, m: int, clauses: Sequence[Sequence[Tuple[int, int]]]) -> "SignedCnf":
        variables = [[v for v, _ in clause] for clause in clauses]
        negations = [[s for _, s in clause] for clause in clauses]
        return cls(m, np.array(variables, dtype=np.int64).reshape(-1, 3), np.array(negations, dtype=np.uint8).reshape(-1, 3))

    @classmethod
    def empty(cls, m: int) -> "SignedCnf":
        return cls(m, np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.uint8))

    @property
    def M(self) -> int:
        return int(self.variables.shape[0])

    def literals(self) -> List[List[Tuple[int, int]]]:
        return [
            [(int(v), int(s)) for v, s in zip(vs, ss)]
            for vs, ss in zip(self.variables, self.negations)
        ]

    def unsigned(self) -> Cnf:
        return Cnf(self.m, self.variables)

    def flip_signs(self, sigma: BitVector) -> "SignedCnf":
        """Toggle the negation bit of every literal on a variable set in sigma."""
        if sigma.length != self.m:
            raise DimensionMismatchError(
                "Sign-flip vector length differs from variable count",
                expected=self.m,
                actual=sigma.length,
            )
        bits = sigma.to_numpy()
        return SignedCnf(self.m, self.variables, self.negations ^ bits[self.variables])

    def flip_variable(self, i: int) -> "SignedCnf":
        if not 0 <= i < self.m:
            raise IndexOutOfRangeError(i, self.m)
        toggles = (self.variables == i).astype(np.uint8)
        return SignedCnf(self.m, self.variables, self.negations ^ toggles)

    def act(self, g: Mask) -> "SignedCnf":
        """Apply a mask element to an already signed formula."""
        if g.m != self.m:
            raise DimensionMismatchError("Mask size differs from formula", expected=self.m, actual=g.m)
        variables = g.pi[self.variables]
        bits = g.sigma.to_numpy()
        return SignedCnf(self.m, variables, self.negations ^ bits[variables])

    def satisfied_by(self, x: BitVector) -> bool:
        """Clause-by-clause evaluation on a single assignment."""
        if x.length != self.m:
            raise DimensionMismatchError("Assignment length differs", expected=self.m, actual=x.length)
        for clause in self.literals():
            if not any(x[v] != s for v, s in clause):
                return False
        return True

    def _falsifiers(self) -> Tuple[np.ndarray, np.ndarray]:
        shifts = np.left_shift(np.uint64(1), self.variables.astype(np.uint64))
        masks = np.bitwise_or.reduce(shifts, axis=1)
        patterns = np.bitwise_or.reduce(
            np.where(self.negations.astype(bool), shifts, np.uint64(0)), axis=1
        )
        return masks, patterns

    def satisfied_mask(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized satisfaction test over packed uint64 assignments."""
        if self.m > PACKED_LIMIT:
            raise DimensionMismatchError(
                "Packed evaluation supports at most 64 variables",
                expected=PACKED_LIMIT,
                actual=self.m,
            )
        xs = np.asarray(xs, dtype=np.uint64)
        if self.M == 0:
            return np.ones(xs.shape[0], dtype=bool)
        masks, patterns = self._falsifiers()
        ok = np.ones(xs.shape[0], dtype=bool)
        step = max(1, (1 << 20) // self.M)
        for start in range(0, xs.shape[0], step):
            chunk = xs[start : start + step, None]
            ok[start : start + step] = ~np.any((chunk & masks) == patterns, axis=1)
        return ok

    def occurrence_counts(self, i: int) -> Tuple[int, int]:
        """(positive, negative) literal occurrences of variable i."""
        hits = self.variables == i
        negative = int(np.count_nonzero(hits & (self.negations == 1)))
        return int(np.count_nonzero(hits)) - negative, negative

    def negative_literal_count(self) -> int:
        return int(self.negations.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedCnf):
            return NotImplemented
        return (
            self.m == other.m
            and np.array_equal(self.variables, other.variables)
            and np.array_equal(self.negations, other.negations)
        )

    def __hash__(self) -> int:
        return hash((self.m, self.variables.tobytes(), self.negations.tobytes()))


@dataclass(frozen=True)
class VvLayer:
    """XOR constraints Ax = b."""

    A: BitMatrix
    b: BitVector

    def __post_init__(self):
        if self.b.length != self.A.k:
            raise DimensionMismatchError(
                "Right-hand side length differs from XOR height",
                expected=self.A.k,
                actual=self.b.length,
            )

    @property
    def k(self) -> int:
        return self.A.k

    @property
    def m(self) -> int:
        return self.A.m

    @classmethod
    def empty(cls, m: int) -> "VvLayer":
        return cls(BitMatrix([], m), BitVector.zeros(0))


@dataclass(frozen=True)
class Witness:
    """The unique satisfying assignment of an on-promise instance."""

    x: BitVector


@dataclass(frozen=True, eq=False)
class Instance:
    """A block (F^h, A, b), optionally carrying its cached witness.

    `on_promise` is set only by code that has verified uniqueness (the sampler,
    the promise-preserving transforms and deserialization of such records).
    `public()` drops the witness and keeps the flag; decoders only ever see
    public instances.
    """

    signed_cnf: SignedCnf
    vv: VvLayer
    witness: Optional[Witness] = None
    on_promise: bool = False

    def __post_init__(self):
        if self.vv.m != self.signed_cnf.m:
            raise DimensionMismatchError(
                "XOR layer width differs from variable count",
                expected=self.signed_cnf.m,
                actual=self.vv.m,
            )
        if self.witness is not None:
            if self.witness.x.length != self.signed_cnf.m:
                raise DimensionMismatchError(
                    "Witness length differs from variable count",
                    expected=self.signed_cnf.m,
                    actual=self.witness.x.length,
                )
            object.__setattr__(self, "on_promise", True)

    @property
    def m(self) -> int:
        return self.signed_cnf.m

    @property
    def k(self) -> int:
        return self.vv.k

    def public(self) -> "Instance":
        return Instance(self.signed_cnf, self.vv, None, self.on_promise)

    def restrict(self, i: int, value: int) -> "Instance":
        """Bit-fixing restriction x_i = value, expressed as an extra XOR row."""
        row = BitVector.unit(self.m, i)
        A = self.vv.A.append_row(row)
        b = self.vv.b.concat(BitVector(value & 1, 1))
        return Instance(self.signed_cnf, VvLayer(A, b))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.signed_cnf == other.signed_cnf
            and self.vv == other.vv
            and self.witness == other.witness
        )

    def __hash__(self) -> int:
        return hash((self.signed_cnf, self.vv.A, self.vv.b))

    def to_bytes(self) -> bytes:
        """Versioned binary record."""
        cnf = self.signed_cnf
        out = bytearray(INSTANCE_MAGIC)
        out += struct.pack("<BIII", INSTANCE_VERSION, self.m, cnf.M, self.k)
        for vs, ss in zip(cnf.variables, cnf.negations):
            for v, s in zip(vs, ss):
                out += struct.pack("<IB", int(v), int(s))
        for row in self.vv.A.rows:
            out += row.packed()
        out += self.vv.b.packed()
        if self.witness is None:
            out += struct.pack("<B", 1 if self.on_promise else 0)
        else:
            out += struct.pack("<B", 2)
            out += self.witness.x.packed()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Instance":
        if data[:4] != INSTANCE_MAGIC:
            raise CodecError("Bad instance magic", offset=0)
        try:
            version, m, M, k = struct.unpack_from("<BIII", data, 4)
            if version != INSTANCE_VERSION:
                raise CodecError(f"Unsupported instance version {version}", offset=32)
            offset = 17
            variables = np.zeros((M, 3), dtype=np.int64)
            negations = np.zeros((M, 3), dtype=np.uint8)
            for c in range(M):
                for j in range(3):
                    variables[c, j], negations[c, j] = struct.unpack_from("<IB", data, offset)
                    offset += 5
            row_bytes = (m + 7) // 8
            rows = []
            for _ in range(k):
                rows.append(_read_packed(data, offset, m))
                offset += row_bytes
            b = _read_packed(data, offset, k)
            offset += (k + 7) // 8
            (flag,) = struct.unpack_from("<B", data, offset)
            offset += 1
            witness = None
            if flag == 2:
                witness = Witness(_read_packed(data, offset, m))
                offset += row_bytes
        except struct.error as exc:
            raise CodecError(f"Truncated instance record: {exc}") from exc
        if offset != len(data):
            raise CodecError("Trailing bytes after instance record", offset=offset * 8)
        return cls(
            SignedCnf(m, variables, negations),
            VvLayer(BitMatrix(rows, m), b),
            witness,
            flag != 0,
        )

    def to_dimacs(self) -> str:
        """DIMACS-like text: 3-CNF clauses plus XOR rows as "x" lines."""
        cnf = self.signed_cnf
        lines = [
            "c usat-lab instance v1",
            f"p cnf {self.m} {cnf.M + self.k}",
        ]
        for clause in cnf.literals():
            lits = [str(-(v + 1) if s else v + 1) for v, s in clause]
            lines.append(" ".join(lits) + " 0")
        for r, row in enumerate(self.vv.A.rows):
            support = row.support()
            rhs = self.vv.b[r]
            if not support:
                # 0 = rhs: trivially true rows are dropped, false ones become the empty clause
                if rhs:
                    lines.append("0")
                continue
            lits = [str(v + 1) for v in support]
            if not rhs:
                lits[0] = "-" + lits[0]
            lines.append("x" + " ".join(lits) + " 0")
        if self.witness is not None:
            lits = [str(v + 1 if bit else -(v + 1)) for v, bit in enumerate(self.witness.x)]
            lines.append("c witness " + " ".join(lits))
        return "\n".join(lines) + "\n"


def _read_packed(data: bytes, offset: int, length: int) -> BitVector:
    nbytes = (length + 7) // 8
    if len(data) < offset + nbytes:
        raise CodecError("Truncated packed vector", offset=offset * 8)
    word = int.from_bytes(data[offset : offset + nbytes], "little")
    if word >> length:
        raise CodecError("Padding bits set in packed vector", offset=offset * 8)
    return BitVector(word, length)


@dataclass(frozen=True)
class BlockSample:
    """A sampled on-promise block with its rejection statistics."""

    instance: Instance
    witness: Witness
    trials: int
    k: int

    def __iter__(self) -> Iterator:
        yield self.instance
        yield self.witness
        yield self.trials


def sample_base_cnf(params: EnsembleParams, rng: Rng) -> Cnf:
    """floor(alpha m) clauses, each a uniform 3-subset drawn independently."""
    m = params.m
    if m < 4:
        raise ValueError(f"Base CNF sampling needs m >= 4, got {m}")
    M = params.clause_count
    clauses = rng.generator.integers(0, m, size=(M, 3), dtype=np.int64)
    while True:
        bad = (
            (clauses[:, 0] == clauses[:, 1])
            | (clauses[:, 0] == clauses[:, 2])
            | (clauses[:, 1] == clauses[:, 2])
        )
        count = int(np.count_nonzero(bad))
        if count == 0:
            break
        clauses[bad] = rng.generator.integers(0, m, size=(count, 3), dtype=np.int64)
    return Cnf(m, clauses)


def apply_mask(F: Cnf, h: Mask) -> SignedCnf:
    """Make every literal positive, then apply h: variable j -> (pi(j), sigma[pi(j)])."""
    if h.m != F.m:
        raise DimensionMismatchError("Mask size differs from formula", expected=F.m, actual=h.m)
    variables = h.pi[F.clauses]
    negations = h.sigma.to_numpy()[variables]
    return SignedCnf(F.m, variables, negations)


def coset_of(inst: Instance) -> AffineCoset:
    return gaussian_affine_solve(inst.vv.A, inst.vv.b)


def enumerate_solutions(
    inst: Instance, limit: Optional[int] = None, max_coset_dim: int = 26
) -> np.ndarray:
    """Packed solutions of the instance, stopping after `limit` of them.

    Raises:
        BudgetExceededError: coset dimension above max_coset_dim, or m > 64
    """
    coset = coset_of(inst)
    if inst.m > PACKED_LIMIT or coset.dimension > max_coset_dim:
        raise BudgetExceededError(
            "Solution enumeration exceeds the coset budget",
            budget="max_coset_dim",
            details={
                "m": inst.m,
                "k": inst.k,
                "rank": coset.rank,
                "coset_dim": coset.dimension,
                "max_coset_dim": max_coset_dim,
            },
        )
    found = []
    total = 0
    for chunk in coset.member_chunks():
        hits = chunk[inst.signed_cnf.satisfied_mask(chunk)]
        if hits.size:
            found.append(hits)
            total += hits.size
            if limit is not None and total >= limit:
                break
    if not found:
        return np.zeros(0, dtype=np.uint64)
    solutions = np.concatenate(found)
    return solutions if limit is None else solutions[:limit]


def count_solutions_capped(inst: Instance, cap: int, max_coset_dim: int = 26) -> int:
    """Exact solution count when below cap; the value cap means "at least cap"."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    return int(enumerate_solutions(inst, cap, max_coset_dim).size)


def all_solutions(F: SignedCnf, max_dim: int = 26) -> np.ndarray:
    """Every satisfying assignment of the CNF alone, packed."""
    return enumerate_solutions(Instance(F, VvLayer.empty(F.m)), None, max_dim)


def _draw_k(params: EnsembleParams, rng: Rng) -> int:
    if params.k_mode is KMode.UNIFORM:
        return rng.integer(0, params.m)
    return params.fixed_k


def sample_block(params: EnsembleParams, rng: Rng) -> BlockSample:
    """Rejection-sample (F, h, A, b) until the instance has a unique solution.

    Returns:
        BlockSample with the on-promise instance, its witness, the number of
        rejection trials used and the k of the accepted trial.

    Raises:
        TrialLimitError: no unique instance within params.trial_limit trials
        BudgetExceededError: a trial's coset is too large to enumerate
    """
    m = params.m
    for trial in range(1, params.trial_limit + 1):
        F = sample_base_cnf(params, rng)
        signed = apply_mask(F, Mask.sample(m, rng))
        k = _draw_k(params, rng)
        A = sample_parity_matrix(k, m, rng)
        b = sample_rhs(k, params.b_mode, rng, params.delta)
        candidate = Instance(signed, VvLayer(A, b))
        solutions = enumerate_solutions(candidate, 2, params.max_coset_dim)
        if solutions.size == 1:
            witness = Witness(BitVector(int(solutions[0]), m))
            return BlockSample(
                Instance(signed, candidate.vv, witness),
                witness,
                trial,
                k,
            )
    logger.warning("Rejection sampling hit the trial limit", m=m, trial_limit=params.trial_limit)
    raise TrialLimitError(params.trial_limit, params.trial_limit, details={"m": m})


def _sample_block_task(job: Tuple[EnsembleParams, Rng]) -> BlockSample:
    params, rng = job
    return sample_block(params, rng)


def sample_blocks(
    params: EnsembleParams, n: int, rng: Rng, label: str = "block", workers: int = 1
) -> List[BlockSample]:
    """n independent blocks; block j uses the substream (label, j)."""
    jobs = [(params, rng.substream(label, j)) for j in range(n)]
    return ordered_map(_sample_block_task, jobs, workers)


def sample_tuple(
    t: Optional[int], params: EnsembleParams, rng: Rng, workers: int = 1
) -> List[BlockSample]:
    """The t-tuple of i.i.d. blocks; t defaults to round(c4 m)."""
    if t is None:
        t = params.default_t
    if t < 1:
        raise ValueError(f"Tuple length must be at least 1, got {t}")
    return sample_blocks(params, t, rng, "block", workers)


class IsolationResult(BaseModel):
    """Empirical isolation rate of random XOR layers on a fixed solution set."""

    rate: float
    n_draws: int
    solution_count: int
    k: int
    lower_band: float
    passed: bool


def vv_isolation_rate(
    F_signed: SignedCnf,
    rng: Rng,
    n_draws: int,
    k: Optional[int] = None,
    slack: int = 1,
) -> IsolationResult:
    """Fraction of fresh (A, b) at k = ceil(log2 |S|) + slack that isolate one solution.

    Raises:
        UnsatisfiableError: the formula has no solutions
    """
    solutions = all_solutions(F_signed)
    size = int(solutions.size)
    if size == 0:
        raise UnsatisfiableError(details={"m": F_signed.m, "M": F_signed.M})
    if k is None:
        k = math.ceil(math.log2(size)) + slack
    m = F_signed.m
    hits = 0
    for _ in range(n_draws):
        rows = rng.generator.integers(0, 1 << m, size=k, dtype=np.uint64)
        b = rng.word(k) if k else 0
        hashes = np.zeros(size, dtype=np.uint64)
        for r, row in enumerate(rows):
            bit = np.bitwise_count(solutions & row).astype(np.uint64) & np.uint64(1)
            hashes |= bit << np.uint64(r)
        if np.count_nonzero(hashes == np.uint64(b)) == 1:
            hits += 1
    rate = hits / n_draws if n_draws else 0.0
    lower = 0.125 - 3.0 * math.sqrt(rate * (1.0 - rate) / n_draws) if n_draws else 0.125
    logger.debug("Isolation rate measured", solution_count=size, k=k, rate=rate)
    return IsolationResult(
        rate=rate,
        n_draws=n_draws,
        solution_count=size,
        k=k,
        lower_band=lower,
        passed=rate >= lower,
    )


def verify_witness(inst: Instance, x: BitVector) -> bool:
    """Independent recheck: clause-by-clause satisfaction and Ax = b."""
    return inst.signed_cnf.satisfied_by(x) and mat_vec_mul(inst.vv.A, x) == inst.vv.b


def ensemble_summary(blocks: Sequence[BlockSample]) -> pd.DataFrame:
    """Per-block summary statistics (one row per block)."""
    rows = []
    for j, block in enumerate(blocks):
        inst = block.instance
        rows.append(
            {
                "block": j,
                "trials": block.trials,
                "k": block.k,
                "negative_literals": inst.signed_cnf.negative_literal_count(),
                "b_weight": inst.vv.b.weight(),
                "witness_weight": block.witness.x.weight(),
            }
        )
    return pd.DataFrame(rows, columns=["block", "trials", "k", "negative_literals", "b_weight", "witness_weight"])

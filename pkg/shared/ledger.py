"""
Description-length ledgers.

A ledger itemizes the bits of a concrete decoder description plus codeword.
It is an upper bound on description length for that decoder, nothing more;
every ledger carries the label "upper bound (ledger)".
"""

import math
from typing import List, Optional, Sequence

from pydantic import BaseModel, Field, computed_field

LEDGER_LABEL = "upper bound (ledger)"
DIGEST_BITS = 64


def gamma_length(n: int) -> int:
    """Bit length of the Elias-gamma code of n >= 1."""
    if n < 1:
        raise ValueError(f"Elias-gamma codes positive integers, got {n}")
    return 2 * (n.bit_length() - 1) + 1


def identity_bits(name: str) -> int:
    """Length-prefixed registry name plus the 64-bit parameter digest."""
    raw = name.encode("utf-8")
    return gamma_length(len(raw) + 1) + 8 * len(raw) + DIGEST_BITS


def seed_field_bits(seed_material: bytes) -> int:
    return gamma_length(len(seed_material) + 1) + 8 * len(seed_material)


def header_allowance(t: int) -> int:
    """Documented O(log t) header slack: 64 + 2 ceil(log2 t)."""
    return 64 + 2 * math.ceil(math.log2(max(t, 1)))


class DescriptionLedger(BaseModel):
    """Itemized bit counts; `total` is their sum."""

    identity_bits: int = Field(default=0, ge=0, description="Registry name and parameter digest")
    seed_bits: int = Field(default=0, ge=0, description="Hard-wired seed material")
    control_bits: int = Field(default=0, ge=0, description="Magic, version and counts")
    payload_bits: int = Field(default=0, ge=0, description="Ranks, residual patches, verbatim witnesses")
    label: str = LEDGER_LABEL

    @computed_field
    @property
    def total(self) -> int:
        return self.identity_bits + self.seed_bits + self.control_bits + self.payload_bits

    @property
    def description_bits(self) -> int:
        """L: the decoder's own description (identity and seed)."""
        return self.identity_bits + self.seed_bits


class UnionBoundRow(BaseModel):
    t: int
    exponent: float
    log2_bound: float
    positive: bool


class UnionBoundCurve(BaseModel):
    delta: float
    gamma: float
    epsilon: float
    eta: float
    per_block_exponent: float
    inequality_holds: bool
    rows: List[UnionBoundRow]


def union_bound_exponent(delta: float, gamma: float, epsilon: float) -> float:
    """Per-block exponent of 2^(delta t) (1/2 + epsilon)^(gamma t)."""
    return delta - gamma * math.log2(1.0 / (0.5 + epsilon))


def union_bound_curve(
    delta: float,
    gamma: float,
    epsilon: float,
    t_range: Sequence[int],
    eta: Optional[float] = None,
) -> UnionBoundCurve:
    """log2 of the union bound per t, and the check delta <= gamma Lambda - eta.

    Lambda = log2(1/(1/2 + epsilon)); eta defaults to gamma / 4.
    """
    if not 0 <= delta < 1 or not 0 < gamma <= 1:
        raise ValueError(f"Need 0 <= delta < 1 and 0 < gamma <= 1, got delta={delta}, gamma={gamma}")
    if not 0 <= epsilon < 0.5:
        raise ValueError(f"Need 0 <= epsilon < 1/2, got {epsilon}")
    if eta is None:
        eta = gamma / 4
    exponent = union_bound_exponent(delta, gamma, epsilon)
    lam = math.log2(1.0 / (0.5 + epsilon))
    rows = [
        UnionBoundRow(t=t, exponent=exponent, log2_bound=exponent * t, positive=exponent * t > 0)
        for t in t_range
    ]
    return UnionBoundCurve(
        delta=delta,
        gamma=gamma,
        epsilon=epsilon,
        eta=eta,
        per_block_exponent=exponent,
        inequality_holds=delta <= gamma * lam - eta,
        rows=rows,
    )

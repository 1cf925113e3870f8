"""
Input validation for the lab CLI: seeds, sizes and enumeration budgets.
"""

from typing import Union

from shared.ensemble import EnsembleParams
from shared.exceptions import BudgetExceededError, ConfigurationError

from app.core.logging_config import get_logger

logger = get_logger("validation")

SEED_LIMIT = 1 << 64
MIN_VARIABLES = 4
ENUMERATION_LIMIT = 26


def parse_seed(value: Union[str, int]) -> int:
    """
    Parse a 64-bit seed given as decimal or 0x-prefixed hex.

    Raises:
        ConfigurationError: not a number, or outside [0, 2^64)
    """
    if isinstance(value, bool):
        raise ConfigurationError("Seed must be an integer", config_key="seed")
    if isinstance(value, int):
        seed = value
    else:
        text = str(value).strip().replace("_", "")
        try:
            seed = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
        except ValueError as e:
            raise ConfigurationError(
                f"Seed '{value}' is neither decimal nor 0x hex",
                config_key="seed",
            ) from e
    if not 0 <= seed < SEED_LIMIT:
        raise ConfigurationError(f"Seed {seed} is outside the 64-bit range", config_key="seed")
    return seed


def validate_ensemble(params: EnsembleParams) -> EnsembleParams:
    """Sanity checks the model validators cannot express alone."""
    if params.m < MIN_VARIABLES:
        raise ConfigurationError(
            f"m={params.m} is too small for clauses on three distinct variables",
            config_key="ensemble.m",
        )
    if params.k is not None and params.k > params.m:
        raise ConfigurationError(
            f"Fixed k={params.k} exceeds m={params.m}",
            config_key="ensemble.k",
        )
    return params


def check_enumeration_budget(m: int, max_coset_dim: int, what: str) -> None:
    """
    Experiments that enumerate all of {0,1}^m need m within the coset budget.

    Raises:
        BudgetExceededError: exit code 3
    """
    limit = min(max_coset_dim, ENUMERATION_LIMIT)
    if m > limit:
        logger.warning("Enumeration budget exceeded", experiment=what, m=m, limit=limit)
        raise BudgetExceededError(
            f"{what} enumerates 2^{m} assignments; the budget allows m <= {limit}",
            budget="max_coset_dim",
            details={"m": m, "limit": limit},
        )

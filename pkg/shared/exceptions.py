"""
Exception hierarchy for the USAT laboratory.

Every error raised by the domain library carries a machine-readable error code,
a details dictionary for diagnostics, and the process exit code the CLI should
use when the error reaches the top level.
"""

import time
from typing import Any, Dict, List, Optional

from pydantic import BaseModel


EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ErrorDetail(BaseModel):
    """Standardized error detail structure."""

    error_code: str
    message: str
    details: Dict[str, Any] = {}
    timestamp: Optional[float] = None
    run_id: Optional[str] = None

    def __init__(self, **data):
        if "timestamp" not in data:
            data["timestamp"] = time.time()
        super().__init__(**data)


class LabError(Exception):
    """Base exception class for laboratory errors."""

    def __init__(
        self,
        message: str,
        error_code: str = "LAB_ERROR",
        details: Dict[str, Any] = None,
        exit_code: int = EXIT_ASSERTION,
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.exit_code = exit_code
        self.timestamp = time.time()
        super().__init__(self.message)

    def to_error_detail(self, run_id: str = None) -> ErrorDetail:
        """Convert exception to structured error detail."""
        return ErrorDetail(
            error_code=self.error_code,
            message=self.message,
            details=self.details,
            timestamp=self.timestamp,
            run_id=run_id,
        )


class DimensionMismatchError(LabError, ValueError):
    """Operands of a GF(2) operation (or a mask and a formula) disagree in size."""

    def __init__(self, message: str, expected: int = None, actual: int = None, **kwargs):
        details = kwargs.pop("details", {})
        if expected is not None:
            details["expected"] = expected
        if actual is not None:
            details["actual"] = actual

        super().__init__(
            message=message,
            error_code="DIMENSION_MISMATCH",
            details=details,
            **kwargs,
        )


class IndexOutOfRangeError(LabError, IndexError):
    """Bit or column index outside the valid range."""

    def __init__(self, index: int, size: int, **kwargs):
        details = kwargs.pop("details", {})
        details.update({"index": index, "size": size})
        super().__init__(
            message=f"Index {index} out of range for size {size}",
            error_code="INDEX_OUT_OF_RANGE",
            details=details,
            **kwargs,
        )


class BudgetExceededError(LabError):
    """Enumeration or runtime budget exceeded."""

    def __init__(self, message: str, budget: str = None, **kwargs):
        details = kwargs.pop("details", {})
        if budget:
            details["budget"] = budget

        super().__init__(
            message=message,
            error_code=kwargs.pop("error_code", "BUDGET_EXCEEDED"),
            details=details,
            exit_code=EXIT_BUDGET,
            **kwargs,
        )


class TrialLimitError(BudgetExceededError):
    """Rejection sampling did not produce an on-promise block in time."""

    def __init__(self, trials: int, limit: int, **kwargs):
        details = kwargs.pop("details", {})
        details.update({"trials": trials, "trial_limit": limit})
        super().__init__(
            message=f"Rejection sampling exceeded the trial limit of {limit}",
            budget="trial_limit",
            details=details,
            error_code="TRIAL_LIMIT_EXCEEDED",
            **kwargs,
        )


class OffPromiseError(LabError):
    """A promise-preserving transform received an instance without the promise."""

    def __init__(self, message: str = "Instance is not on-promise", **kwargs):
        super().__init__(message=message, error_code="OFF_PROMISE", **kwargs)


class UnsatisfiableError(LabError):
    """An operation required a satisfiable formula."""

    def __init__(self, message: str = "Formula has no satisfying assignment", **kwargs):
        super().__init__(message=message, error_code="UNSATISFIABLE", **kwargs)


class DeciderInconsistencyError(LabError):
    """The USAT decider's answers do not determine a witness."""

    def __init__(self, message: str, bit_index: int = None, **kwargs):
        details = kwargs.pop("details", {})
        if bit_index is not None:
            details["bit_index"] = bit_index
        super().__init__(
            message=message,
            error_code="DECIDER_INCONSISTENCY",
            details=details,
            **kwargs,
        )


class CodecError(LabError):
    """Malformed or truncated codeword."""

    def __init__(self, message: str, offset: int = None, **kwargs):
        details = kwargs.pop("details", {})
        if offset is not None:
            details["bit_offset"] = offset
        super().__init__(
            message=message,
            error_code="MALFORMED_CODEWORD",
            details=details,
            **kwargs,
        )


class UnknownDecoderError(LabError, KeyError):
    """Decoder identity not resolvable in the registry."""

    def __init__(self, name: str, digest: str = None, **kwargs):
        details = kwargs.pop("details", {})
        details["decoder"] = name
        if digest is not None:
            details["digest"] = digest
        super().__init__(
            message=f"Decoder '{name}' is not registered",
            error_code="UNKNOWN_DECODER",
            details=details,
            **kwargs,
        )

    def __str__(self) -> str:
        return self.message


class RankOutOfRangeError(LabError, ValueError):
    """Subset rank outside [0, C(n, w))."""

    def __init__(self, rank: int, n: int, w: int, **kwargs):
        details = kwargs.pop("details", {})
        details.update({"rank": str(rank), "n": n, "w": w})
        super().__init__(
            message=f"Rank {rank} out of range for {w}-subsets of {n}",
            error_code="RANK_OUT_OF_RANGE",
            details=details,
            **kwargs,
        )


class EmptyTrainingSetError(LabError):
    """ERM split left no training blocks."""

    def __init__(self, message: str = "ERM training set is empty", **kwargs):
        super().__init__(message=message, error_code="EMPTY_TRAINING_SET", **kwargs)


class ConfigurationError(LabError):
    """Invalid experiment configuration."""

    def __init__(
        self,
        message: str,
        config_key: str = None,
        field_errors: Dict[str, List[str]] = None,
        **kwargs,
    ):
        details = kwargs.pop("details", {})
        if config_key:
            details["config_key"] = config_key
        if field_errors:
            details["field_errors"] = field_errors

        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            details=details,
            exit_code=EXIT_CONFIG,
            **kwargs,
        )


class AssertionFailure(LabError):
    """A checked property of an experiment did not hold."""

    def __init__(self, message: str, check: str = None, **kwargs):
        details = kwargs.pop("details", {})
        if check:
            details["check"] = check
        super().__init__(
            message=message,
            error_code="ASSERTION_FAILED",
            details=details,
            exit_code=EXIT_ASSERTION,
            **kwargs,
        )

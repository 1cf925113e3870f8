"""
Error handling for the lab CLI.

The exception hierarchy lives in `shared.exceptions`; this module re-exports it
and adds the helpers that turn errors into structured error payloads and exit
codes.
"""

import traceback
from typing import Any, Dict, Optional, Tuple

from shared.exceptions import (
    EXIT_ASSERTION,
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_OK,
    AssertionFailure,
    BudgetExceededError,
    CodecError,
    ConfigurationError,
    DeciderInconsistencyError,
    DimensionMismatchError,
    EmptyTrainingSetError,
    ErrorDetail,
    IndexOutOfRangeError,
    LabError,
    OffPromiseError,
    RankOutOfRangeError,
    TrialLimitError,
    UnknownDecoderError,
    UnsatisfiableError,
)

__all__ = [
    "EXIT_OK",
    "EXIT_ASSERTION",
    "EXIT_CONFIG",
    "EXIT_BUDGET",
    "ErrorDetail",
    "LabError",
    "AssertionFailure",
    "BudgetExceededError",
    "CodecError",
    "ConfigurationError",
    "DeciderInconsistencyError",
    "DimensionMismatchError",
    "EmptyTrainingSetError",
    "IndexOutOfRangeError",
    "OffPromiseError",
    "RankOutOfRangeError",
    "TrialLimitError",
    "UnknownDecoderError",
    "UnsatisfiableError",
    "create_error_response",
    "handle_pydantic_validation_error",
    "wrap_unexpected",
]


def create_error_response(
    error_code: str,
    message: str,
    exit_code: int = EXIT_ASSERTION,
    details: Dict[str, Any] = None,
    run_id: str = None,
    include_traceback: bool = False,
) -> Tuple[int, ErrorDetail]:
    """
    Create a standardized error payload.

    Args:
        error_code: Error code identifier
        message: Human-readable error message
        exit_code: Process exit code to use
        details: Additional error details
        run_id: Identifier of the run, for correlating with logs
        include_traceback: Whether to include traceback in details

    Returns:
        (exit_code, ErrorDetail)
    """
    error_details = details or {}

    if include_traceback:
        error_details["traceback"] = traceback.format_exc()

    error_detail = ErrorDetail(
        error_code=error_code,
        message=message,
        details=error_details,
        run_id=run_id,
    )
    return exit_code, error_detail


def handle_pydantic_validation_error(exc: Exception, config_key: Optional[str] = None) -> ConfigurationError:
    """
    Convert Pydantic validation errors into a ConfigurationError with field-level messages.

    Args:
        exc: Pydantic ValidationError
        config_key: Section of the configuration being validated

    Returns:
        ConfigurationError: exit code 2
    """
    field_errors: Dict[str, list] = {}

    if hasattr(exc, "errors"):
        for error in exc.errors():
            field_name = ".".join(str(x) for x in error.get("loc", []))
            error_msg = error.get("msg", "Invalid value")
            field_errors.setdefault(field_name, []).append(error_msg)

    return ConfigurationError(
        message="Invalid experiment configuration",
        config_key=config_key,
        field_errors=field_errors,
    )


def wrap_unexpected(exc: Exception) -> LabError:
    """LabErrors pass through unchanged; anything else becomes a LabError naming the original type."""
    if isinstance(exc, LabError):
        return exc
    return LabError(
        message=str(exc) or type(exc).__name__,
        error_code="UNEXPECTED_ERROR",
        details={"exception_type": type(exc).__name__},
    )

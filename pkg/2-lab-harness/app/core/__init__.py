"""
Core components for the lab CLI.

Includes:
- config: Configuration management
- exceptions: Error payloads and exit codes
- logging_config: Structured logging setup
"""

from .config import ConfigManager, ExperimentConfig, config_manager
from .exceptions import (
    AssertionFailure,
    BudgetExceededError,
    ConfigurationError,
    LabError,
    create_error_response,
    handle_pydantic_validation_error,
    wrap_unexpected,
)
from .logging_config import StructuredLogger, get_logger, setup_structured_logging

__all__ = [
    "ConfigManager",
    "ExperimentConfig",
    "config_manager",
    "LabError",
    "AssertionFailure",
    "BudgetExceededError",
    "ConfigurationError",
    "create_error_response",
    "handle_pydantic_validation_error",
    "wrap_unexpected",
    "setup_structured_logging",
    "get_logger",
    "StructuredLogger",
]

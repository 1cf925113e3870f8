"""
Structured JSON logging configuration using structlog.

Log lines go to stderr so stdout carries nothing but report paths. Log records
never enter reports.
"""

import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import psutil
import structlog

from shared import __version__

SERVICE_NAME = "usat-lab"


def add_timestamp(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Add ISO 8601 timestamp to log entries."""
    event_dict["timestamp"] = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
    return event_dict


def add_service_context(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Add service name and artifact version to all log entries."""
    event_dict["service"] = SERVICE_NAME
    event_dict["version"] = __version__
    return event_dict


def add_log_level(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Normalize log level names for consistency."""
    level_mapping = {
        "debug": "DEBUG",
        "info": "INFO",
        "warning": "WARNING",
        "warn": "WARNING",
        "error": "ERROR",
        "critical": "CRITICAL",
        "exception": "ERROR",
    }
    event_dict["level"] = level_mapping.get(method_name.lower(), method_name.upper())
    return event_dict


def setup_structured_logging(environment: str = "development", log_level: str = "INFO") -> None:
    """
    Configure structured JSON logging.

    Args:
        environment: Run environment (development/ci/production)
        log_level: Minimum log level to output
    """
    level = getattr(logging, log_level.upper(), logging.INFO)
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    processors = [
        structlog.stdlib.filter_by_level,
        add_service_context,
        add_timestamp,
        add_log_level,
        lambda logger, method_name, event_dict: {
            **event_dict,
            "environment": environment,
        },
        structlog.processors.JSONRenderer(sort_keys=True),
    ]

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(component: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """
    Get a configured structured logger.

    Args:
        component: Component name (e.g., 'experiments', 'selftest', 'reporting')
    """
    logger = structlog.get_logger()
    if component:
        logger = logger.bind(component=component)
    return logger


def peak_memory_mb() -> float:
    return round(psutil.Process().memory_info().rss / (1024 * 1024), 1)


class StructuredLogger:
    """Helpers for the recurring experiment log events."""

    def __init__(self, component: Optional[str] = None):
        self.logger = get_logger(component)

    def experiment_started(self, subcommand: str, seed: int, workers: int, **kwargs) -> None:
        self.logger.info(
            "Experiment started",
            subcommand=subcommand,
            seed=f"0x{seed:016x}",
            workers=workers,
            **kwargs,
        )

    def experiment_completed(self, subcommand: str, passed: bool, duration_ms: float, **kwargs) -> None:
        level = self.logger.info if passed else self.logger.warning
        level(
            "Experiment completed",
            subcommand=subcommand,
            passed=passed,
            duration_ms=round(duration_ms, 2),
            memory_mb=peak_memory_mb(),
            **kwargs,
        )

    def assertion_checked(self, name: str, passed: bool, criterion: Optional[int] = None, **kwargs) -> None:
        level = self.logger.info if passed else self.logger.warning
        level("Assertion checked", check=name, passed=passed, criterion=criterion, **kwargs)

    def budget_event(self, budget: str, limit: int, **kwargs) -> None:
        self.logger.warning("Budget exceeded", budget=budget, limit=limit, **kwargs)

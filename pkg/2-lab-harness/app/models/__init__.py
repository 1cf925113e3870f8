"""
Data models for the lab CLI.

Organized into:
- reports: Self-describing experiment reports and check results
"""

from .reports import REPORT_SCHEMA_VERSION, CheckResult, Report

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "CheckResult",
    "Report",
]

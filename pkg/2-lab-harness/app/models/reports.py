"""
Report models.

A report echoes the configuration (runtime-only settings left out), carries the experiment payload and one
CheckResult per asserted property. Wall-clock time appears only when the
configuration asks for it, so identical (config, seed, version) give
byte-identical reports.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

REPORT_SCHEMA_VERSION = 1


class CheckResult(BaseModel):
    """One asserted property."""

    name: str = Field(..., description="Check identifier")
    criterion: Optional[int] = Field(default=None, description="Acceptance criterion number (1-10)")
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)


class Report(BaseModel):
    """Self-describing experiment report."""

    schema_version: int = Field(default=REPORT_SCHEMA_VERSION)
    artifact_version: str
    subcommand: str
    seed: str = Field(..., description="Master seed as 0x-prefixed 16-digit hex")
    config: Dict[str, Any]
    payload: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckResult] = Field(default_factory=list)
    passed: bool = True
    ledger_label: str = Field(default="upper bound (ledger)")
    wall_clock_seconds: Optional[float] = None

    def failed_checks(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_json_dict(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json")
        if self.wall_clock_seconds is None:
            data.pop("wall_clock_seconds")
        return data

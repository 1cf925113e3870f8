"""
Report emission: one JSON report per run plus optional CSV tables.

JSON is written with sorted keys and a trailing newline, so equal reports are
equal files.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from app.core.logging_config import get_logger
from app.models.reports import Report

SCHEMA_PATH = Path(__file__).resolve().parents[2] / "schemas" / "report.schema.json"


def render_report(report: Report) -> str:
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


class ReportWriter:
    """Writes reports and their tables under an output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.logger = get_logger("reporting")

    def report_path(self, report: Report) -> Path:
        return self.out_dir / f"{report.subcommand}-{report.seed}.json"

    def write(self, report: Report, tables: Optional[Dict[str, pd.DataFrame]] = None) -> List[Path]:
        """Write the JSON report and, when given, one CSV per table. Returns the written paths."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.report_path(report)
        path.write_text(render_report(report), encoding="utf-8")
        written = [path]

        for name, table in sorted((tables or {}).items()):
            table_path = self.out_dir / f"{report.subcommand}-{report.seed}-{name}.csv"
            table.to_csv(table_path, index=False, lineterminator="\n")
            written.append(table_path)

        self.logger.info(
            "Report written",
            subcommand=report.subcommand,
            path=str(path),
            tables=len(written) - 1,
            passed=report.passed,
        )
        return written

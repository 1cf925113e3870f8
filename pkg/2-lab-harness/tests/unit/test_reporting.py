"""
Unit tests for report rendering and output files.
"""

import json

import jsonschema
import pandas as pd
import pytest

from app.core.config import ExperimentConfig
from app.models.reports import CheckResult, Report
from app.services.experiments import ExperimentService, Outcome
from app.services.reporting import ReportWriter, load_schema, render_report


def make_report(**updates):
    data = dict(
        artifact_version="1.0.0",
        subcommand="codec",
        seed="0x0000000000001234",
        config=ExperimentConfig(seed=0x1234).report_view(),
        payload={"z": 1, "a": [1, 2]},
        checks=[CheckResult(name="codec_round_trip", criterion=7, passed=True)],
    )
    data.update(updates)
    return Report(**data)


class TestRendering:
    """Test JSON rendering."""

    def test_sorted_keys_and_trailing_newline(self):
        """Test output is sorted JSON ending in a newline."""
        text = render_report(make_report())

        assert text.endswith("}\n")
        assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"

    def test_timing_only_when_present(self):
        """Test wall-clock time is omitted unless recorded."""
        assert "wall_clock_seconds" not in json.loads(render_report(make_report()))
        timed = json.loads(render_report(make_report(wall_clock_seconds=1.5)))
        assert timed["wall_clock_seconds"] == 1.5

    def test_equal_reports_render_identically(self):
        """Test rendering is a function of the report alone."""
        assert render_report(make_report()) == render_report(make_report())

    def test_failed_checks(self):
        """Test failed checks are listed."""
        report = make_report(
            checks=[
                CheckResult(name="a", passed=True),
                CheckResult(name="b", criterion=3, passed=False),
            ],
            passed=False,
        )
        assert [c.name for c in report.failed_checks()] == ["b"]


class TestReportWriter:
    """Test files written by ReportWriter."""

    def test_writes_report_and_tables(self, tmp_path):
        """Test the report path, table paths and their order."""
        writer = ReportWriter(str(tmp_path / "out"))
        tables = {
            "zeta": pd.DataFrame({"t": [1, 2]}),
            "audit": pd.DataFrame({"run": [0], "round_trip": [True]}),
        }
        written = writer.write(make_report(), tables)

        assert [p.name for p in written] == [
            "codec-0x0000000000001234.json",
            "codec-0x0000000000001234-audit.csv",
            "codec-0x0000000000001234-zeta.csv",
        ]
        assert written[0].read_text(encoding="utf-8") == render_report(make_report())
        assert written[2].read_text(encoding="utf-8") == "t\n1\n2\n"

    def test_report_only(self, tmp_path):
        """Test no tables are written unless given."""
        written = ReportWriter(str(tmp_path)).write(make_report())
        assert len(written) == 1
        assert written[0].exists()


class TestSchema:
    """Test rendered reports against schemas/report.schema.json."""

    def test_rendered_report_validates(self):
        """Test a rendered report satisfies the published schema."""
        jsonschema.validate(json.loads(render_report(make_report())), load_schema())

    def test_timed_report_validates(self):
        """Test the optional timing field is allowed."""
        jsonschema.validate(json.loads(render_report(make_report(wall_clock_seconds=0.25))), load_schema())

    @pytest.mark.parametrize(
        "field,value",
        [
            ("seed", "0x1234"),
            ("subcommand", "bogus"),
            ("ledger_label", "lower bound"),
            ("schema_version", 2),
            ("passed", "yes"),
            ("extra", 1),
        ],
    )
    def test_malformed_top_level_rejected(self, field, value):
        """Test wrong types, patterns, enums and unknown fields fail validation."""
        data = json.loads(render_report(make_report()))
        data[field] = value
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(data, load_schema())

    @pytest.mark.parametrize(
        "check",
        [
            {"name": "a", "criterion": 11, "passed": True, "detail": {}},
            {"name": "a", "criterion": 3, "passed": True},
            {"name": "a", "criterion": "3", "passed": True, "detail": {}},
        ],
    )
    def test_malformed_check_rejected(self, check):
        """Test checks need every field, an integer criterion and a range of 1 to 10."""
        data = json.loads(render_report(make_report()))
        data["checks"] = [check]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(data, load_schema())

    @pytest.mark.parametrize("field", ["workers", "output", "logging", "environment"])
    def test_runtime_fields_rejected_in_config(self, field):
        """Test the echoed configuration never carries runtime-only settings."""
        data = json.loads(render_report(make_report()))
        data["config"][field] = ExperimentConfig().model_dump(mode="json")[field]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(data, load_schema())

    def test_missing_config_section_rejected(self):
        """Test nested required members are enforced."""
        data = json.loads(render_report(make_report()))
        del data["config"]["trials"]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(data, load_schema())


class TestReportConfig:
    """Test the configuration echoed by ExperimentService reports."""

    def test_service_report_validates(self, lab_config):
        """Test a report built by the service satisfies the schema."""
        report = ExperimentService(lab_config).build_report("sample", Outcome(), 0.0)
        jsonschema.validate(json.loads(render_report(report)), load_schema())

    def test_worker_count_does_not_change_the_report(self, lab_config):
        """Test reports built under different worker counts render identically."""
        serial = ExperimentService(lab_config).build_report("sample", Outcome(), 0.0)
        parallel = ExperimentService(lab_config.model_copy(update={"workers": 8})).build_report(
            "sample", Outcome(), 0.0
        )
        assert render_report(serial) == render_report(parallel)

    def test_output_path_does_not_change_the_report(self, lab_config):
        """Test the output directory is not echoed."""
        moved = lab_config.model_copy(update={"output": lab_config.output.model_copy(update={"path": "elsewhere"})})
        first = ExperimentService(lab_config).build_report("codec", Outcome(), 0.0)
        second = ExperimentService(moved).build_report("codec", Outcome(), 0.0)
        assert render_report(first) == render_report(second)
        assert "workers" not in first.config

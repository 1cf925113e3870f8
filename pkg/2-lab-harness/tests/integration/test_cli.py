"""
Integration tests for the `lab` command line.

Runs subcommands end to end on the small test configuration and checks exit
codes, printed paths and byte-identical reruns.
"""

import json

import jsonschema
import pytest
import yaml

from app.services.reporting import load_schema
from main import main


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("LAB_SEED", "LAB_WORKERS", "LAB_OUTPUT_PATH", "LAB_BACKMAP", "LAB_K_MODE"):
        monkeypatch.delenv(name, raising=False)


def report_path(lab_config, subcommand):
    return lab_config.output.path + f"/{subcommand}-0x{lab_config.seed:016x}.json"


class TestSubcommands:
    """Test subcommands that must pass exactly."""

    @pytest.mark.parametrize("subcommand", ["sample", "codec"])
    def test_exact_subcommands_pass(self, subcommand, config_file, lab_config, capsys):
        """Test exit code 0 and the printed report path."""
        assert main([subcommand, "--config", str(config_file)]) == 0

        printed = capsys.readouterr().out.split()
        assert printed == [report_path(lab_config, subcommand)]
        report = json.loads(open(printed[0], encoding="utf-8").read())
        assert report["subcommand"] == subcommand
        assert report["passed"] is True
        assert report["seed"] == "0x0000000000001234"
        assert report["config"]["ensemble"]["m"] == 8
        jsonschema.validate(report, load_schema())

    def test_reruns_are_byte_identical(self, config_file, lab_config):
        """Test the same config and seed reproduce the same report bytes."""
        path = report_path(lab_config, "codec")
        assert main(["codec", "--config", str(config_file)]) == 0
        first = open(path, "rb").read()
        assert main(["codec", "--config", str(config_file)]) == 0
        assert open(path, "rb").read() == first

    @pytest.mark.parametrize("subcommand", ["sample", "codec"])
    def test_worker_count_gives_identical_bytes(self, subcommand, config_file, lab_config):
        """Test a two-process run writes the same report bytes as a serial run."""
        path = report_path(lab_config, subcommand)
        assert main([subcommand, "--config", str(config_file), "--workers", "1"]) == 0
        serial = open(path, "rb").read()
        assert main([subcommand, "--config", str(config_file), "--workers", "2"]) == 0
        assert open(path, "rb").read() == serial

    def test_seed_flag_changes_the_report(self, config_file, lab_config, capsys):
        """Test --seed overrides the file and names the report."""
        assert main(["sample", "--config", str(config_file), "--seed", "0x99"]) == 0
        printed = capsys.readouterr().out.split()
        assert printed[0].endswith("sample-0x0000000000000099.json")

    def test_tables_flag(self, config_file, capsys):
        """Test --tables writes CSV tables after the report."""
        assert main(["sample", "--config", str(config_file), "--tables"]) == 0
        printed = capsys.readouterr().out.split()
        assert len(printed) == 2
        assert printed[1].endswith("-blocks.csv")

    @pytest.mark.parametrize("subcommand", ["isolate", "success", "clash"])
    def test_statistical_subcommands_write_reports(self, subcommand, config_file, lab_config):
        """Test statistical subcommands finish with a pass or assertion exit code."""
        assert main([subcommand, "--config", str(config_file)]) in (0, 1)
        report = json.loads(open(report_path(lab_config, subcommand), encoding="utf-8").read())
        assert report["checks"]


class TestExitCodes:
    """Test usage, configuration and budget failures."""

    def test_unknown_subcommand(self):
        """Test argparse rejects unknown subcommands with exit code 2."""
        with pytest.raises(SystemExit) as exc_info:
            main(["bogus"])
        assert exc_info.value.code == 2

    def test_missing_config_file(self, tmp_path):
        """Test a missing config file exits with 2."""
        assert main(["sample", "--config", str(tmp_path / "absent.yaml")]) == 2

    def test_invalid_seed(self, config_file):
        """Test an unparseable seed exits with 2."""
        assert main(["sample", "--config", str(config_file), "--seed", "banana"]) == 2

    def test_unknown_decoder(self, config_file):
        """Test an unregistered decoder name exits with 2."""
        assert main(["codec", "--config", str(config_file), "--decoder", "mystery"]) == 2

    def test_enumeration_budget(self, tmp_path, lab_config):
        """Test enumerating beyond the coset budget exits with 3."""
        data = lab_config.model_dump(mode="json")
        data["trials"]["isolation_m"] = 30
        path = tmp_path / "big.yaml"
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        assert main(["isolate", "--config", str(path)]) == 3

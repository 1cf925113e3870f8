"""
Unit tests for configuration loading and validation.

Settings merge as defaults < config file < environment < CLI overrides.
"""

import json

import pytest

from app.core.config import SCHEMA_VERSION, ConfigManager, ExperimentConfig
from shared.exceptions import ConfigurationError
from shared.symmetry import BackMapMode

LAB_ENV = [
    "LAB_SEED",
    "LAB_WORKERS",
    "LAB_ENVIRONMENT",
    "LAB_LOG_LEVEL",
    "LAB_OUTPUT_PATH",
    "LAB_BACKMAP",
    "LAB_K_MODE",
]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Remove LAB_* variables inherited from the shell."""
    for name in LAB_ENV:
        monkeypatch.delenv(name, raising=False)


class TestDefaults:
    """Test the default configuration."""

    def test_defaults(self):
        """Test defaults load without a file."""
        config = ConfigManager().load_config()

        assert config.schema_version == SCHEMA_VERSION
        assert config.seed == 0
        assert config.workers == 1
        assert config.ensemble.m == 16
        assert config.wrapper.backmap is BackMapMode.COORDINATE
        assert config.output.path == "reports"

    def test_config_before_load(self):
        """Test reading the config before loading raises RuntimeError."""
        with pytest.raises(RuntimeError):
            ConfigManager().config


class TestSources:
    """Test the priority of configuration sources."""

    def test_file_overrides_defaults(self, config_file):
        """Test values from the YAML file replace defaults."""
        config = ConfigManager(str(config_file)).load_config()

        assert config.seed == 0x1234
        assert config.ensemble.m == 8
        assert config.trials.codec_t == 4

    def test_json_file(self, tmp_path):
        """Test JSON config files load."""
        path = tmp_path / "lab.json"
        path.write_text(json.dumps({"seed": "0xff", "ensemble": {"m": 10}}), encoding="utf-8")
        config = ConfigManager(str(path)).load_config()

        assert config.seed == 255
        assert config.ensemble.m == 10
        assert config.ensemble.alpha == 4.2

    def test_environment_overrides_file(self, config_file, monkeypatch):
        """Test LAB_* variables replace file values."""
        monkeypatch.setenv("LAB_SEED", "99")
        monkeypatch.setenv("LAB_WORKERS", "3")
        monkeypatch.setenv("LAB_BACKMAP", "vvlabel")
        config = ConfigManager(str(config_file)).load_config()

        assert config.seed == 99
        assert config.workers == 3
        assert config.wrapper.backmap is BackMapMode.VVLABEL

    def test_cli_overrides_environment(self, config_file, monkeypatch):
        """Test CLI overrides win over the environment."""
        monkeypatch.setenv("LAB_SEED", "99")
        config = ConfigManager(str(config_file)).load_config({"seed": "0x10", "output": {"tables": True}})

        assert config.seed == 16
        assert config.output.tables is True
        assert config.output.path.endswith("reports")

    def test_bad_worker_count_in_environment(self, monkeypatch):
        """Test a non-integer LAB_WORKERS is a configuration error."""
        monkeypatch.setenv("LAB_WORKERS", "many")
        with pytest.raises(ConfigurationError) as exc_info:
            ConfigManager().load_config()
        assert exc_info.value.details["config_key"] == "workers"


class TestInvalidConfigurations:
    """Test configuration errors."""

    def test_missing_file(self, tmp_path):
        """Test a named file that does not exist is an error."""
        with pytest.raises(ConfigurationError) as exc_info:
            ConfigManager(str(tmp_path / "absent.yaml")).load_config()
        assert exc_info.value.exit_code == 2

    def test_unparseable_file(self, tmp_path):
        """Test broken YAML is an error."""
        path = tmp_path / "broken.yaml"
        path.write_text("seed: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            ConfigManager(str(path)).load_config()

    def test_non_mapping_file(self, tmp_path):
        """Test a YAML list is not a configuration."""
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            ConfigManager(str(path)).load_config()

    @pytest.mark.parametrize(
        "overrides,field",
        [
            ({"wrapper": {"s": 4}}, "wrapper.s"),
            ({"workers": 0}, "workers"),
            ({"schema_version": 2}, "schema_version"),
            ({"wrapper": {"backmap": "sideways"}}, "wrapper.backmap"),
        ],
    )
    def test_invalid_values(self, overrides, field):
        """Test field validators surface as field errors."""
        with pytest.raises(ConfigurationError) as exc_info:
            ConfigManager().load_config(overrides)
        assert field in exc_info.value.details["field_errors"]

    def test_bad_seed_text(self):
        """Test an unparseable seed is rejected."""
        with pytest.raises(ConfigurationError):
            ConfigManager().load_config({"seed": "banana"})


class TestModel:
    """Test the configuration model directly."""

    def test_hex_seed(self):
        """Test seeds given as hex text."""
        assert ExperimentConfig(seed="0x1234").seed == 0x1234

    def test_round_trips_through_json_mode(self):
        """Test the JSON dump reloads to an equal model."""
        config = ExperimentConfig(seed=7, wrapper={"s": 5})
        assert ExperimentConfig(**config.model_dump(mode="json")) == config

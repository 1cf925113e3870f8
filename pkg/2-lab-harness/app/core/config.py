"""
Configuration management for the lab CLI.

Settings are merged with the priority defaults < config file < environment <
CLI flags. Config files are YAML; JSON files load unchanged since JSON is a
YAML subset.
"""

import os
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from shared.ensemble import EnsembleParams
from shared.sils import SilsSpec
from shared.symmetry import BackMapMode

from app.utils.validation import parse_seed
from .exceptions import ConfigurationError, handle_pydantic_validation_error
from .logging_config import get_logger

SCHEMA_VERSION = 1

# Settings that change how a run executes but never what it computes
RUNTIME_FIELDS = frozenset({"environment", "workers", "output", "logging"})

logger = get_logger("config")


class EnsembleSection(EnsembleParams):
    """Block ensemble parameters (m, alpha, c1..c4, b_mode, k_mode)."""


class LocalitySection(BaseModel):
    """Chart radius and tree-likeness / sparsification sizes."""

    radius: Optional[int] = Field(default=None, ge=0, description="Chart radius; default round(c3 log2 m)")
    tree_radius: int = Field(default=2, ge=0, description="Radius for the tree-likeness trend")
    tree_m_values: List[int] = Field(default=[64, 512], description="Variable counts compared by the trend")
    tree_alpha: float = Field(default=0.3, gt=0, description="Clause density of the tree-likeness ensemble")
    tree_c1: float = Field(default=0.5, gt=0, description="XOR height constant of the tree-likeness ensemble")
    tree_samples: int = Field(default=10_000, ge=1, description="Sampled roots per m")
    sparsify_blocks: int = Field(default=100_000, ge=1, description="Blocks for the sparsification tables")
    min_group: int = Field(default=500, ge=1, description="Smallest group tested against the band")


class WrapperSection(BaseModel):
    """Symmetrization and ERM wrapper parameters."""

    s: Optional[int] = Field(default=None, ge=1, description="Symmetrization draws; default ceil(20 log2(m t)), odd")
    kappa: Optional[int] = Field(default=None, ge=1, description="Independence of sign flips; default ceil(12 log2(m t))")
    t: Optional[int] = Field(default=None, ge=1, description="Tuple length; default round(c4 m)")
    train_fraction: float = Field(default=0.5, gt=0, lt=1, description="Share of blocks in the ERM training set")
    backmap: BackMapMode = Field(default=BackMapMode.COORDINATE, description="Back-map convention")

    @field_validator("s")
    @classmethod
    def s_must_be_odd(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value % 2 == 0:
            raise ValueError("s must be odd so that majorities never tie")
        return value


class DecoderSection(BaseModel):
    """Decoder selection for success and codec experiments."""

    name: str = Field(default="local-parity", description="Registry name of the decoder under test")
    table_path: Optional[str] = Field(default=None, description="Plug-in table artifact for 'local-table'")
    rule_seed: int = Field(default=0, ge=0, description="Seed of the sils-rule decoder")
    pivot: int = Field(default=0, ge=0, description="Pivot bit for the pivot-success bound")


class TrialsSection(BaseModel):
    """Sample sizes per experiment."""

    sample_blocks: int = Field(default=100, ge=1)
    involution_blocks: int = Field(default=10_000, ge=1)
    isolation_m: int = Field(default=14, ge=2)
    isolation_formulas: int = Field(default=50, ge=1)
    isolation_draws: int = Field(default=10_000, ge=1)
    isolation_max_solutions: int = Field(default=1024, ge=2)
    neutrality_blocks: int = Field(default=100_000, ge=1)
    neutrality_min_bucket: int = Field(default=200, ge=1)
    exchange_blocks: int = Field(default=20_000, ge=1)
    exchange_min_bucket: int = Field(default=1000, ge=1)
    invariance_triples: int = Field(default=1000, ge=1)
    symmetrization_m: int = Field(default=12, ge=1)
    symmetrization_blocks: int = Field(default=10_000, ge=1)
    codec_runs: int = Field(default=1000, ge=1)
    codec_t: int = Field(default=16, ge=1)
    self_reduce_blocks: int = Field(default=1000, ge=1)
    erm_train: int = Field(default=100_000, ge=1)
    success_m: int = Field(default=12, ge=1)
    success_t: int = Field(default=8, ge=1)
    success_tuples: int = Field(default=10_000, ge=1)
    clash_tuples: int = Field(default=20, ge=1)
    clash_t_values: Optional[List[int]] = Field(default=None, description="Default: 4..round(c4 m)")


class UnionBoundSection(BaseModel):
    """Report-level inputs of the union-bound curve."""

    delta: Optional[float] = Field(default=None, ge=0, lt=1, description="Default gamma / 8")
    gamma: Optional[float] = Field(default=None, gt=0, le=1, description="Default: measured structural fraction")
    epsilon: float = Field(default=0.0, ge=0, lt=0.5)
    eta: Optional[float] = Field(default=None, ge=0, description="Default gamma / 4")


class OutputSection(BaseModel):
    """Report output options."""

    path: str = Field(default="reports", description="Directory for JSON reports and CSV tables")
    tables: bool = Field(default=False, description="Write CSV tables next to the report")
    include_timing: bool = Field(default=False, description="Put wall-clock time into reports")


class LoggingConfig(BaseModel):
    """Logging configuration."""

    level: str = Field(default="INFO", description="Log level")


class ExperimentConfig(BaseModel):
    """Complete experiment configuration; all but the runtime fields are echoed into reports."""

    schema_version: int = Field(default=SCHEMA_VERSION)
    environment: str = Field(default="development", description="Environment name")
    seed: int = Field(default=0, ge=0, lt=1 << 64, description="Master seed (decimal or 0x hex)")
    workers: int = Field(default=1, ge=1, description="Worker processes")
    ensemble: EnsembleSection = Field(default_factory=EnsembleSection)
    sils: SilsSpec = Field(default_factory=SilsSpec)
    locality: LocalitySection = Field(default_factory=LocalitySection)
    wrapper: WrapperSection = Field(default_factory=WrapperSection)
    decoder: DecoderSection = Field(default_factory=DecoderSection)
    trials: TrialsSection = Field(default_factory=TrialsSection)
    union_bound: UnionBoundSection = Field(default_factory=UnionBoundSection)
    output: OutputSection = Field(default_factory=OutputSection)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator("seed", mode="before")
    @classmethod
    def seed_from_text(cls, value: Any) -> Any:
        if isinstance(value, str):
            return parse_seed(value)
        return value

    @field_validator("schema_version")
    @classmethod
    def known_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"Unsupported schema_version {value}; expected {SCHEMA_VERSION}")
        return value

    def report_view(self) -> Dict[str, Any]:
        """The configuration as echoed into reports, without runtime-only settings."""
        return self.model_dump(mode="json", exclude=set(RUNTIME_FIELDS))


class ConfigManager:
    """Handles configuration loading and management."""

    def __init__(self, config_file: Optional[str] = None):
        """Initialize with an optional config file path; a named file must exist."""
        self.config_file = config_file
        self._config: Optional[ExperimentConfig] = None

    def load_config(self, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        """
        Load configuration with the following priority:
        1. CLI overrides (highest priority)
        2. Environment variables
        3. Config file (if named)
        4. Default configuration (fallback)

        Raises:
            ConfigurationError: missing or unreadable file, or invalid values
        """
        config_data = self._get_default_config()
        config_source = "defaults"

        if self.config_file is not None:
            if not os.path.exists(self.config_file):
                raise ConfigurationError(
                    f"Config file not found: {self.config_file}",
                    config_key="config",
                )
            try:
                with open(self.config_file, "r", encoding="utf-8") as f:
                    file_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Could not parse {self.config_file}: {e}", config_key="config") from e
            if not isinstance(file_config, dict):
                raise ConfigurationError("Config file must hold a mapping", config_key="config")
            config_data = self._deep_merge(config_data, file_config)
            config_source = self.config_file

        config_data = self._apply_env_overrides(config_data)
        if overrides:
            config_data = self._deep_merge(config_data, overrides)

        try:
            self._config = ExperimentConfig(**config_data)
        except ValidationError as e:
            raise handle_pydantic_validation_error(e) from e

        logger.info(
            "Configuration loaded",
            source=config_source,
            environment=self._config.environment,
            seed=f"0x{self._config.seed:016x}",
        )
        return self._config

    def _apply_env_overrides(self, config_data: Dict[str, Any]) -> Dict[str, Any]:
        """Apply environment variable overrides to configuration."""
        env_mappings = {
            "LAB_SEED": ["seed"],
            "LAB_WORKERS": ["workers"],
            "LAB_ENVIRONMENT": ["environment"],
            "LAB_LOG_LEVEL": ["logging", "level"],
            "LAB_OUTPUT_PATH": ["output", "path"],
            "LAB_BACKMAP": ["wrapper", "backmap"],
            "LAB_K_MODE": ["ensemble", "k_mode"],
        }

        for env_var, config_path in env_mappings.items():
            env_value = os.getenv(env_var)
            if env_value:
                current = config_data
                for key in config_path[:-1]:
                    current = current.setdefault(key, {})

                final_key = config_path[-1]
                if final_key == "workers":
                    try:
                        current[final_key] = int(env_value)
                    except ValueError as e:
                        raise ConfigurationError(
                            f"{env_var} must be an integer", config_key=".".join(config_path)
                        ) from e
                else:
                    current[final_key] = env_value

        return config_data

    def _deep_merge(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        """Deep merge two dictionaries, with override taking precedence."""
        result = base.copy()

        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._deep_merge(result[key], value)
            else:
                result[key] = value

        return result

    def _get_default_config(self) -> Dict[str, Any]:
        """Default configuration: the model defaults, serialized."""
        return ExperimentConfig().model_dump(mode="json")

    @property
    def config(self) -> ExperimentConfig:
        """Get the loaded configuration."""
        if self._config is None:
            raise RuntimeError("Configuration not loaded. Call load_config() first.")
        return self._config


# Global configuration manager instance
config_manager = ConfigManager()

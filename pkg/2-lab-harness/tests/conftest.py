"""
Pytest configuration and shared fixtures for the test suite.

Fixtures here build small, seeded objects: an ensemble at m = 8, a handful of
on-promise blocks, and configurations sized so every experiment finishes in
seconds.
"""

import os
import sys

import pytest
import yaml

# Add the harness and the repository root to the import path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from shared.ensemble import EnsembleParams, sample_blocks  # noqa: E402
from shared.hashing import Rng  # noqa: E402

from app.core.config import ExperimentConfig  # noqa: E402

SMALL_TRIALS = {
    "sample_blocks": 5,
    "involution_blocks": 20,
    "isolation_m": 8,
    "isolation_formulas": 2,
    "isolation_draws": 200,
    "neutrality_blocks": 200,
    "neutrality_min_bucket": 10,
    "exchange_blocks": 100,
    "exchange_min_bucket": 20,
    "invariance_triples": 3,
    "symmetrization_m": 8,
    "symmetrization_blocks": 10,
    "codec_runs": 2,
    "codec_t": 4,
    "self_reduce_blocks": 3,
    "erm_train": 200,
    "success_m": 8,
    "success_t": 3,
    "success_tuples": 20,
    "clash_tuples": 2,
    "clash_t_values": [2, 4],
}


@pytest.fixture
def rng():
    """Seeded random stream."""
    return Rng(0x5EED)


@pytest.fixture
def small_params():
    """Ensemble at m = 8 with the default densities."""
    return EnsembleParams(m=8)


@pytest.fixture(scope="module")
def small_blocks():
    """Twelve on-promise blocks at m = 8."""
    return sample_blocks(EnsembleParams(m=8), 12, Rng(7), "fixture")


@pytest.fixture
def lab_config(tmp_path):
    """Configuration with tiny experiment sizes, writing into a temp directory."""
    return ExperimentConfig(
        seed=0x1234,
        ensemble={"m": 8},
        trials=SMALL_TRIALS,
        locality={
            "tree_samples": 50,
            "tree_m_values": [16, 32],
            "sparsify_blocks": 50,
            "min_group": 10,
        },
        wrapper={"s": 3, "kappa": 2},
        output={"path": str(tmp_path / "reports")},
    )


@pytest.fixture
def config_file(tmp_path, lab_config):
    """The small configuration written as YAML."""
    path = tmp_path / "lab.yaml"
    data = lab_config.model_dump(mode="json")
    path.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")
    return path

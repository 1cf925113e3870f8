"""
Unit tests for the sign-invariant local sketch.
"""

import pytest

from shared.ensemble import EnsembleParams, Mask, SignedCnf, apply_mask, sample_base_cnf
from shared.hashing import Rng
from shared.sils import (
    MERSENNE_61,
    SilsFeature,
    SilsSpec,
    SilsVector,
    carter_wegman,
    check_invariance,
    extract_sils,
)


def sign_sensitive(F: SignedCnf, spec: SilsSpec) -> SilsVector:
    """The sketch plus the parity of the negative-literal count."""
    z = extract_sils(F, spec)
    parity = F.negative_literal_count() & 1
    return SilsVector(bits=z.bits | (parity << z.r_m), r_m=z.r_m + 1)


class TestSketchLength:
    """Test r_m = floor(c_z log2 m) and truncation."""

    @pytest.mark.parametrize("m,bound", [(8, 12), (16, 16), (64, 24)])
    def test_length_bound(self, m, bound):
        """Test the default length constant."""
        assert SilsSpec().length_bound(m) == bound

    @pytest.mark.parametrize("m", [8, 16, 40])
    def test_sketch_fits_bound(self, m):
        """Test the sketch never exceeds r_m bits."""
        spec = SilsSpec()
        F = apply_mask(sample_base_cnf(EnsembleParams(m=m), Rng(m)), Mask.identity(m))
        z = extract_sils(F, spec)
        assert z.r_m <= spec.length_bound(m)
        assert z.bits >> z.r_m == 0

    def test_cooccurrence_field_is_reserved(self):
        """Test the co-occurrence feature keeps its bits after pattern counts."""
        spec = SilsSpec(
            features=[SilsFeature.DEGREE_HISTOGRAM, SilsFeature.PATTERN_COUNTS, SilsFeature.COOCCURRENCE]
        )
        F = apply_mask(sample_base_cnf(EnsembleParams(m=64), Rng(1)), Mask.identity(64))
        z = extract_sils(F, spec)
        assert z.r_m == 24

    def test_spec_is_frozen(self):
        """Test a SilsSpec cannot be mutated after construction."""
        spec = SilsSpec()
        with pytest.raises(Exception):
            spec.rho = 2


class TestSketchInvariance:
    """Test the sketch is constant on mask orbits."""

    def test_equal_across_masks(self):
        """Test two random masks give the same sketch."""
        rng = Rng(31)
        F = sample_base_cnf(EnsembleParams(m=16), rng)
        spec = SilsSpec()
        first = extract_sils(apply_mask(F, Mask.sample(16, rng)), spec)
        second = extract_sils(apply_mask(F, Mask.sample(16, rng)), spec)
        assert first == second

    def test_check_invariance_passes(self):
        """Test the invariance check over many masks."""
        F = sample_base_cnf(EnsembleParams(m=16), Rng(2))
        result = check_invariance(F, SilsSpec(rho=2), 20, Rng(3))
        assert result.passed
        assert result.distinct_values == 1
        assert result.n_masks == 20

    def test_sign_sensitive_feature_is_caught(self):
        """Test a planted sign-dependent feature fails the invariance check."""
        F = sample_base_cnf(EnsembleParams(m=16), Rng(2))
        result = check_invariance(F, SilsSpec(), 20, Rng(3), extractor=sign_sensitive)
        assert not result.passed
        assert result.distinct_values == 2

    def test_different_formulas_can_differ(self):
        """Test the sketch is not constant across formulas."""
        spec = SilsSpec()
        values = {
            extract_sils(apply_mask(sample_base_cnf(EnsembleParams(m=64), Rng(seed)), Mask.identity(64)), spec)
            for seed in range(10)
        }
        assert len(values) > 1


class TestCarterWegman:
    """Test the seeded pattern-count hash."""

    def test_deterministic_and_bounded(self):
        """Test equal inputs hash equally into the requested width."""
        for key in (0, 1, MERSENNE_61 + 5, (1 << 64) - 1):
            value = carter_wegman(key, 10, 7, "patterns")
            assert value == carter_wegman(key, 10, 7, "patterns")
            assert 0 <= value < 1 << 10

    def test_seed_changes_hash(self):
        """Test different seeds give different hash functions."""
        keys = range(50)
        a = [carter_wegman(k, 16, 1, "patterns") for k in keys]
        b = [carter_wegman(k, 16, 2, "patterns") for k in keys]
        assert a != b

"""
Unit tests for masked formulas, instances and the block sampler.
"""

import numpy as np
import pytest

from shared.ensemble import (
    Cnf,
    EnsembleParams,
    Instance,
    KMode,
    Mask,
    SignedCnf,
    VvLayer,
    all_solutions,
    apply_mask,
    count_solutions_capped,
    enumerate_solutions,
    ensemble_summary,
    sample_base_cnf,
    sample_block,
    sample_blocks,
    sample_tuple,
    verify_witness,
    vv_isolation_rate,
)
from shared.exceptions import (
    BudgetExceededError,
    CodecError,
    DimensionMismatchError,
    TrialLimitError,
    UnsatisfiableError,
)
from shared.gf2 import BitMatrix, BitVector
from shared.hashing import BMode, Rng


class TestEnsembleParams:
    """Test derived ensemble quantities."""

    def test_defaults(self):
        """Test clause count, k, t and radius at m = 16."""
        params = EnsembleParams(m=16)
        assert params.clause_count == 67
        assert params.fixed_k == 4
        assert params.default_t == 16
        assert params.default_radius == 2
        assert params.delta == pytest.approx(16.0 ** -10)

    def test_fixed_k_override(self):
        """Test an explicit k wins over c1 log2 m."""
        assert EnsembleParams(m=16, k=7).fixed_k == 7

    def test_validation(self):
        """Test non-positive alpha is refused."""
        with pytest.raises(ValueError):
            EnsembleParams(m=8, alpha=0)


class TestMasks:
    """Test mask application and composition."""

    def test_apply_mask_identity_keeps_positive_literals(self):
        """Test the identity mask yields the all-positive formula."""
        F = Cnf(4, np.array([[0, 1, 2], [1, 2, 3]]))
        signed = apply_mask(F, Mask.identity(4))
        assert signed.literals() == [[(0, 0), (1, 0), (2, 0)], [(1, 0), (2, 0), (3, 0)]]

    def test_apply_mask_permutes_and_signs(self):
        """Test variable j maps to pi(j) with sign sigma[pi(j)]."""
        F = Cnf(4, np.array([[0, 1, 2]]))
        h = Mask(np.array([3, 2, 1, 0]), BitVector.from_bits([0, 1, 0, 1]))
        assert apply_mask(F, h).literals() == [[(3, 1), (2, 0), (1, 1)]]

    def test_compose_matches_sequential_action(self):
        """Test (g * h) acting on F equals g acting on (h acting on F)."""
        rng = Rng(4)
        F = sample_base_cnf(EnsembleParams(m=8), rng)
        g, h = Mask.sample(8, rng), Mask.sample(8, rng)
        positive = apply_mask(F, Mask.identity(8))
        assert positive.act(h).act(g) == positive.act(g.compose(h))

    def test_mask_validation(self):
        """Test a non-bijective pi or a short sigma is refused."""
        with pytest.raises(ValueError):
            Mask(np.array([0, 0, 1]), BitVector.zeros(3))
        with pytest.raises(DimensionMismatchError):
            Mask(np.arange(3), BitVector.zeros(4))
        with pytest.raises(DimensionMismatchError):
            apply_mask(Cnf(4, np.array([[0, 1, 2]])), Mask.identity(5))

    def test_clauses_need_distinct_variables(self):
        """Test repeated variables within a clause are refused."""
        with pytest.raises(ValueError):
            Cnf(4, np.array([[0, 0, 1]]))

    def test_base_cnf_shape(self):
        """Test floor(alpha m) clauses of distinct variables."""
        F = sample_base_cnf(EnsembleParams(m=10, alpha=3.0), Rng(1))
        assert F.M == 30
        assert all(len(set(row)) == 3 for row in F.clauses.tolist())

    def test_base_cnf_needs_four_variables(self):
        """Test m < 4 is refused."""
        with pytest.raises(ValueError):
            sample_base_cnf(EnsembleParams(m=3), Rng(1))


class TestSignedCnf:
    """Test satisfaction and sign bookkeeping."""

    @pytest.fixture
    def formula(self):
        # (x0 or not x1 or x2) and (not x0 or x1 or x3)
        return SignedCnf.from_literals(4, [[(0, 0), (1, 1), (2, 0)], [(0, 1), (1, 0), (3, 0)]])

    def test_satisfied_by(self, formula):
        """Test a literal (v, s) holds iff x_v != s."""
        assert formula.satisfied_by(BitVector.from_bits([0, 0, 0, 0]))
        assert not formula.satisfied_by(BitVector.from_bits([0, 1, 0, 0]))
        assert not formula.satisfied_by(BitVector.from_bits([1, 0, 0, 0]))

    def test_packed_evaluation_agrees(self, formula):
        """Test the vectorized test matches the clause-by-clause one."""
        xs = np.arange(16, dtype=np.uint64)
        mask = formula.satisfied_mask(xs)
        expected = [formula.satisfied_by(BitVector(int(x), 4)) for x in xs]
        assert mask.tolist() == expected

    def test_flip_variable_is_involution(self, formula):
        """Test flipping a variable twice restores the formula."""
        assert formula.flip_variable(1).flip_variable(1) == formula
        assert formula.flip_variable(1) != formula

    def test_flip_signs_tracks_solutions(self, formula):
        """Test x satisfies F iff x + sigma satisfies F flipped by sigma."""
        sigma = BitVector.from_bits([1, 0, 1, 1])
        flipped = formula.flip_signs(sigma)
        for word in range(16):
            x = BitVector(word, 4)
            assert formula.satisfied_by(x) == flipped.satisfied_by(x ^ sigma)

    def test_occurrence_counts(self, formula):
        """Test positive and negative occurrences per variable."""
        assert formula.occurrence_counts(0) == (1, 1)
        assert formula.occurrence_counts(1) == (1, 1)
        assert formula.occurrence_counts(3) == (1, 0)
        assert formula.negative_literal_count() == 2

    def test_empty_formula_is_always_satisfied(self):
        """Test the empty CNF accepts every assignment."""
        assert all_solutions(SignedCnf.empty(3)).size == 8


class TestInstances:
    """Test instances, restriction and serialization."""

    def test_restrict_adds_unit_row(self, small_blocks):
        """Test restriction appends e_i with right-hand side value."""
        inst = small_blocks[0].instance
        restricted = inst.restrict(2, 1)
        assert restricted.k == inst.k + 1
        assert restricted.vv.A.rows[-1] == BitVector.unit(inst.m, 2)
        assert restricted.vv.b[restricted.k - 1] == 1
        assert restricted.witness is None

    def test_public_drops_witness(self, small_blocks):
        """Test decoders see no witness but keep the promise flag."""
        public = small_blocks[0].instance.public()
        assert public.witness is None
        assert public.on_promise

    def test_bytes_keep_witness_and_flag(self, small_blocks):
        """Test the binary record restores the same instance."""
        inst = small_blocks[1].instance
        restored = Instance.from_bytes(inst.to_bytes())
        assert restored == inst
        assert restored.on_promise
        public = Instance.from_bytes(inst.public().to_bytes())
        assert public.witness is None and public.on_promise

    def test_bad_magic_and_trailing_bytes(self, small_blocks):
        """Test malformed records raise CodecError."""
        data = small_blocks[0].instance.to_bytes()
        with pytest.raises(CodecError):
            Instance.from_bytes(b"XXXX" + data[4:])
        with pytest.raises(CodecError):
            Instance.from_bytes(data + b"\x00")
        with pytest.raises(CodecError):
            Instance.from_bytes(data[:20])

    def test_dimacs_lines(self):
        """Test clause and XOR lines of the text format."""
        cnf = SignedCnf.from_literals(3, [[(0, 0), (1, 1), (2, 0)]])
        vv = VvLayer(BitMatrix.from_lists([[1, 0, 1]]), BitVector.from_bits([0]))
        text = Instance(cnf, vv).to_dimacs()
        lines = text.splitlines()
        assert lines[1] == "p cnf 3 2"
        assert lines[2] == "1 -2 3 0"
        assert lines[3] == "x-1 3 0"

    def test_layer_width_checked(self):
        """Test the XOR layer must match the variable count."""
        with pytest.raises(DimensionMismatchError):
            Instance(SignedCnf.empty(3), VvLayer.empty(4))


class TestSampler:
    """Test rejection sampling of on-promise blocks."""

    def test_blocks_are_unique_and_verified(self, small_blocks):
        """Test each sampled block has exactly one solution, its witness."""
        for block in small_blocks:
            inst = block.instance
            solutions = enumerate_solutions(inst)
            assert solutions.size == 1
            assert int(solutions[0]) == block.witness.x.word
            assert verify_witness(inst, block.witness.x)
            assert block.trials >= 1

    def test_reproducible_by_seed(self, small_params):
        """Test the same seed and label give the same blocks."""
        first = sample_blocks(small_params, 3, Rng(99), "repro")
        second = sample_blocks(small_params, 3, Rng(99), "repro")
        assert [b.instance for b in first] == [b.instance for b in second]

    def test_workers_do_not_change_results(self, small_params):
        """Test parallel sampling returns the serial blocks in order."""
        serial = sample_blocks(small_params, 4, Rng(5), "par", workers=1)
        parallel = sample_blocks(small_params, 4, Rng(5), "par", workers=2)
        assert [b.instance for b in serial] == [b.instance for b in parallel]

    def test_fixed_k_mode(self):
        """Test fixed mode always uses k = round(c1 log2 m)."""
        params = EnsembleParams(m=8, k_mode=KMode.FIXED)
        block = sample_block(params, Rng(3))
        assert block.k == 3
        assert block.instance.k == 3

    def test_delta_biased_rhs(self):
        """Test the biased right-hand side mode samples valid blocks."""
        params = EnsembleParams(m=8, b_mode=BMode.DELTA_BIASED, c2=1.0)
        block = sample_block(params, Rng(12))
        assert verify_witness(block.instance, block.witness.x)

    def test_unpacks_to_instance_witness_trials(self, small_params):
        """Test a sampled block unpacks to its instance, witness and rejection trial count."""
        block = sample_block(small_params, Rng(8))
        inst, w, trials = block
        assert inst is block.instance
        assert w is block.witness
        assert trials == block.trials >= 1
        assert verify_witness(inst, w.x)

    def test_trial_limit(self, mocker):
        """Test rejection gives up after trial_limit trials without a unique solution."""
        mocker.patch("shared.ensemble.enumerate_solutions", return_value=np.zeros(0, dtype=np.uint64))
        params = EnsembleParams(m=8, trial_limit=3)
        with pytest.raises(TrialLimitError) as exc_info:
            sample_block(params, Rng(1))
        assert exc_info.value.exit_code == 3

    def test_tuple_defaults_to_round_c4_m(self, small_params):
        """Test t defaults to the ensemble's tuple length."""
        blocks = sample_tuple(None, small_params, Rng(2))
        assert len(blocks) == small_params.default_t
        with pytest.raises(ValueError):
            sample_tuple(0, small_params, Rng(2))

    def test_summary_columns(self, small_blocks):
        """Test one summary row per block."""
        table = ensemble_summary(small_blocks)
        assert list(table.columns) == ["block", "trials", "k", "negative_literals", "b_weight", "witness_weight"]
        assert len(table) == len(small_blocks)


class TestEnumeration:
    """Test capped enumeration and budgets."""

    def test_cap(self):
        """Test the cap bounds the count."""
        inst = Instance(SignedCnf.empty(6), VvLayer.empty(6))
        assert count_solutions_capped(inst, 5) == 5
        assert count_solutions_capped(inst, 100) == 64

    def test_budget(self):
        """Test a coset above the budget raises BudgetExceededError."""
        inst = Instance(SignedCnf.empty(10), VvLayer.empty(10))
        with pytest.raises(BudgetExceededError):
            enumerate_solutions(inst, max_coset_dim=8)


class TestIsolation:
    """Test the isolation-rate experiment."""

    def test_unsatisfiable(self):
        """Test a formula without solutions is refused."""
        clauses = [[(0, s0), (1, s1), (2, s2)] for s0 in (0, 1) for s1 in (0, 1) for s2 in (0, 1)]
        with pytest.raises(UnsatisfiableError):
            vv_isolation_rate(SignedCnf.from_literals(3, clauses), Rng(1), 10)

    @pytest.mark.statistical
    def test_rate_above_one_eighth(self):
        """Test random XORs isolate a solution of a loose formula often enough."""
        F = SignedCnf.from_literals(8, [[(0, 0), (1, 0), (2, 0)], [(3, 1), (4, 0), (5, 1)]])
        result = vv_isolation_rate(F, Rng(21), 2000)
        assert result.solution_count == 7 * 7 * 4
        assert result.k == 8 + 1
        assert result.passed
        assert result.rate >= 0.125

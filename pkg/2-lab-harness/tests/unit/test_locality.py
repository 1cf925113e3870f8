"""
Unit tests for factor graphs, canonical codes and the locality experiments.
"""

import itertools

import pytest

from app.services.experiments import ExperimentService
from shared.ensemble import EnsembleParams, KMode, SignedCnf
from shared.exceptions import IndexOutOfRangeError
from shared.factor_graph import (
    CYCLIC_PREFIX,
    TREE_PREFIX,
    SignedRootedPattern,
    build_factor_graph,
    canonical_code,
    dump_pattern,
    extract_neighborhood,
    relabel_pattern,
)
from shared.gf2 import BitVector, column
from shared.hashing import Rng
from shared.locality import (
    ChartKey,
    TreeReport,
    sign_marginals_by_shape,
    sparsification_experiment,
    tree_likeness_experiment,
    tree_likeness_trend,
)


def chain(signs=(0, 0, 0, 0, 0, 0)):
    """(x0, x1, x2) and (x2, x3, x4): a path of two clauses."""
    s = signs
    return SignedCnf.from_literals(5, [[(0, s[0]), (1, s[1]), (2, s[2])], [(2, s[3]), (3, s[4]), (4, s[5])]])


class TestNeighborhoods:
    """Test breadth-first neighborhoods and tree detection."""

    def test_radius_counts_variable_layers(self):
        """Test r = 1 reaches the first clause and r = 2 the second."""
        G = build_factor_graph(chain())
        one = extract_neighborhood(G, 0, 1)
        assert one.variables == (0, 1, 2)
        assert one.variable_depths == (0, 1, 1)
        assert one.clauses == (0,)
        two = extract_neighborhood(G, 0, 2)
        assert set(two.variables) == {0, 1, 2, 3, 4}
        assert len(two.clauses) == 2
        assert two.is_tree

    def test_radius_zero_is_root_only(self):
        """Test the radius-0 pattern is the bare root."""
        p = extract_neighborhood(build_factor_graph(chain()), 3, 0)
        assert p.variables == (3,)
        assert p.edges == ()
        assert p.is_tree

    def test_cycle_detected(self):
        """Test two clauses sharing two variables form a cycle."""
        F = SignedCnf.from_literals(4, [[(0, 0), (1, 0), (2, 0)], [(0, 0), (1, 0), (3, 0)]])
        p = extract_neighborhood(build_factor_graph(F), 0, 1)
        assert not p.is_tree
        assert canonical_code(p).startswith(CYCLIC_PREFIX)

    def test_bad_root_and_radius(self):
        """Test invalid roots and radii are refused."""
        G = build_factor_graph(chain())
        with pytest.raises(IndexOutOfRangeError):
            extract_neighborhood(G, 5, 1)
        with pytest.raises(ValueError):
            extract_neighborhood(G, 0, -1)

    def test_degrees(self):
        """Test the graph's degree vector."""
        G = build_factor_graph(chain())
        assert G.degrees().tolist() == [1, 1, 2, 1, 1]
        assert G.edge_count == 6


class TestCanonicalCodes:
    """Test canonical codes under relabeling and signs."""

    def test_tree_prefix(self):
        """Test tree patterns get the tree prefix."""
        p = extract_neighborhood(build_factor_graph(chain()), 0, 2)
        assert canonical_code(p).startswith(TREE_PREFIX)

    def test_relabeling_invariance(self):
        """Test renumbering non-root nodes leaves the code unchanged."""
        p = extract_neighborhood(build_factor_graph(chain((0, 1, 0, 1, 1, 0))), 0, 2)
        relabeled = relabel_pattern(p, [0, 2, 1, 4, 3], [1, 0])
        assert canonical_code(relabeled) == canonical_code(p)
        with pytest.raises(ValueError):
            relabel_pattern(p, [1, 0, 2, 3, 4], [0, 1])

    def test_isomorphic_formulas_share_codes(self):
        """Test the same shape under other variable names has the same code."""
        renamed = SignedCnf.from_literals(5, [[(3, 0), (0, 0), (4, 0)], [(4, 0), (1, 0), (2, 0)]])
        p = extract_neighborhood(build_factor_graph(chain()), 0, 2)
        q = extract_neighborhood(build_factor_graph(renamed), 3, 2)
        assert canonical_code(p) == canonical_code(q)

    def test_signs_matter_only_when_signed(self):
        """Test signed codes see literal signs and unsigned codes do not."""
        plain = extract_neighborhood(build_factor_graph(chain()), 0, 2)
        signed = extract_neighborhood(build_factor_graph(chain((1, 0, 0, 0, 1, 0))), 0, 2)
        assert canonical_code(plain) != canonical_code(signed)
        assert canonical_code(plain, signed=False) == canonical_code(signed, signed=False)

    def test_dump(self):
        """Test the text dump names the root and every clause."""
        p = extract_neighborhood(build_factor_graph(chain()), 0, 2)
        text = dump_pattern(p)
        assert text.startswith("x0 (root, r=2, tree)")
        assert "C0" in text and "C1" in text


def signed_trees(max_nodes):
    """Every labelled signed rooted factor tree with at most max_nodes nodes.

    Node 0 is the root variable; node k > 0 hangs off parents[k - 1] through an
    edge of sign signs[k - 1]. Even depths are variables, odd depths clauses.
    """
    for n in range(1, max_nodes + 1):
        for parents in itertools.product(*(range(k) for k in range(1, n))):
            for signs in itertools.product((0, 1), repeat=n - 1):
                yield parents, signs


def tree_pattern(parents, signs):
    depth = [0]
    for p in parents:
        depth.append(depth[p] + 1)
    var_nodes = [k for k, d in enumerate(depth) if d % 2 == 0]
    clause_nodes = [k for k, d in enumerate(depth) if d % 2 == 1]
    var_pos = {k: i for i, k in enumerate(var_nodes)}
    clause_pos = {k: i for i, k in enumerate(clause_nodes)}
    edges = []
    for child, (p, s) in enumerate(zip(parents, signs), start=1):
        v, c = (child, p) if depth[child] % 2 == 0 else (p, child)
        edges.append((var_pos[v], clause_pos[c], s))
    return SignedRootedPattern(
        root=0,
        radius=max(depth) // 2 + 1,
        variables=tuple(var_nodes),
        variable_depths=tuple(depth[k] // 2 for k in var_nodes),
        clauses=tuple(clause_nodes),
        edges=tuple(edges),
    )


def isomorphism_class(parents, signs):
    """Nested (edge sign, sorted children) tuples; equal exactly for isomorphic signed rooted trees."""
    children = {k: [] for k in range(len(parents) + 1)}
    for child, p in enumerate(parents, start=1):
        children[p].append(child)

    def form(k):
        return (signs[k - 1] if k else -1, tuple(sorted(form(c) for c in children[k])))

    return form(0)


class TestCanonicalCodeInjectivity:
    """Test canonical codes exhaustively over small signed rooted trees."""

    @pytest.mark.parametrize("max_nodes", [5, pytest.param(7, marks=pytest.mark.slow)])
    def test_codes_separate_exactly_the_isomorphism_classes(self, max_nodes):
        """Test equal codes imply isomorphic trees and isomorphic trees share a code."""
        class_of_code = {}
        code_of_class = {}
        for parents, signs in signed_trees(max_nodes):
            code = canonical_code(tree_pattern(parents, signs))
            cls = isomorphism_class(parents, signs)
            assert code.startswith(TREE_PREFIX)
            assert class_of_code.setdefault(code, cls) == cls
            assert code_of_class.setdefault(cls, code) == code
        assert len(class_of_code) == len(code_of_class)

    def test_class_counts_for_small_trees(self):
        """Test the number of distinct codes per node count against hand counts."""
        signed, unsigned = {}, {}
        for parents, signs in signed_trees(4):
            n = len(parents) + 1
            p = tree_pattern(parents, signs)
            signed.setdefault(n, set()).add(canonical_code(p))
            unsigned.setdefault(n, set()).add(canonical_code(p, signed=False))
        assert {n: len(codes) for n, codes in signed.items()} == {1: 1, 2: 2, 3: 7, 4: 26}
        assert {n: len(codes) for n, codes in unsigned.items()} == {1: 1, 2: 1, 3: 2, 4: 4}


class TestCharts:
    """Test chart keys."""

    def test_chart_from_block(self, small_blocks):
        """Test the chart carries the code and the VV labels of bit i."""
        inst = small_blocks[0].instance
        key = ChartKey.from_block(inst, 2, 1)
        G = build_factor_graph(inst.signed_cnf)
        assert key.canonical_code == canonical_code(extract_neighborhood(G, 2, 1))
        assert key.a_i == column(inst.vv.A, 2)
        assert key.b == inst.vv.b
        assert key == ChartKey.from_block(inst, 2, 1, graph=G)

    def test_labels_distinguish_charts(self):
        """Test equal patterns with different labels are different charts."""
        code = b"Tv()"
        assert ChartKey(code, BitVector.zeros(2), BitVector.zeros(2)) != ChartKey(
            code, BitVector.unit(2, 0), BitVector.zeros(2)
        )


class TestSignMarginals:
    """Test per-shape sign marginals."""

    def test_all_negative_shape_is_flagged(self):
        """Test a shape whose literals are always negated is flagged."""
        p = extract_neighborhood(build_factor_graph(chain((1,) * 6)), 0, 2)
        rows = sign_marginals_by_shape([p] * 100, min_occurrences=50)
        assert rows
        assert all(row.negative_fraction == 1.0 for row in rows)
        assert all(row.flagged for row in rows)

    def test_rare_shapes_skipped(self):
        """Test shapes below the occurrence threshold are left out."""
        p = extract_neighborhood(build_factor_graph(chain()), 0, 2)
        assert sign_marginals_by_shape([p] * 10, min_occurrences=50) == []


class TestLocalityExperiments:
    """Test the tree-likeness and sparsification experiments."""

    def test_tree_row(self):
        """Test the tree-likeness row for a small sparse ensemble."""
        params = EnsembleParams(m=32, alpha=0.3, c1=0.5, k_mode=KMode.FIXED)
        row = tree_likeness_experiment(params, 2, 40, Rng(1))
        assert row.n == 40
        assert row.m == 32
        assert row.k == params.fixed_k
        assert 0.0 <= row.tree_fraction <= 1.0
        assert 1 <= row.distinct_patterns <= row.distinct_charts <= 40

    def test_tree_row_reproducible(self):
        """Test the experiment is a function of the seed."""
        params = EnsembleParams(m=16, alpha=0.3, c1=0.5)
        assert tree_likeness_experiment(params, 1, 20, Rng(4)) == tree_likeness_experiment(params, 1, 20, Rng(4))

    @pytest.mark.statistical
    @pytest.mark.slow
    def test_tree_fraction_grows_and_charts_spread(self):
        """Test larger m gives more tree-like neighborhoods and rarer charts."""
        params = EnsembleParams(alpha=0.3, c1=0.5, k_mode=KMode.FIXED)
        report = tree_likeness_trend(params, [64, 512], 2, 2000, Rng(10))
        assert report.tree_fraction_increases
        assert report.chart_frequency_drops
        assert report.passed

    def test_sparsification_tables(self):
        """Test both group tables are built with their keys."""
        report = sparsification_experiment(EnsembleParams(m=8), 1, 30, Rng(3), min_group=5)
        assert report.n_blocks == 30
        assert report.u_groups.keyed_by == "local_input"
        assert report.chart_groups.keyed_by == "chart"
        assert all(g.count >= 5 for g in report.chart_groups.groups)
        assert 0.0 <= report.u_groups.small_group_mass <= 1.0


class TestTreelikeOverrides:
    """Test the tree-likeness run labels the ensemble it actually used."""

    def test_report_names_the_overrides(self, mocker, lab_config):
        """Test the payload records locality.tree_alpha and tree_c1 against the configured ensemble."""
        empty = TreeReport(
            radius=2, rows=[], tree_fraction_increases=False,
            chart_frequency_ratio=None, chart_frequency_drops=False, passed=False,
        )
        trend = mocker.patch("app.services.experiments.tree_likeness_trend", return_value=empty)
        outcome = ExperimentService(lab_config).treelike(Rng(1))

        used = trend.call_args.args[0]
        assert (used.alpha, used.c1, used.k_mode) == (0.3, 0.5, KMode.FIXED)
        labelled = outcome.payload["ensemble_overrides"]
        assert labelled["source"] == "locality"
        assert labelled["overridden"] == {"alpha": 0.3, "c1": 0.5, "k_mode": "fixed", "k": None}
        assert labelled["configured"]["alpha"] == lab_config.ensemble.alpha
        assert labelled["configured"]["k_mode"] == lab_config.ensemble.k_mode.value

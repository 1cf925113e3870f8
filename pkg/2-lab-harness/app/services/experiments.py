"""
Experiment orchestration.

`ExperimentService.run(subcommand)` executes one experiment from the shared
library against the loaded configuration and returns a Report. Every
experiment draws from the master seed's substream named after it, so a
subcommand's report depends only on (config, seed, version).
"""

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd

from shared import __version__
from shared.codec import (
    ADVERSARIAL_PATTERNS,
    adversarial_truths,
    audit,
    binomial_rank,
    binomial_unrank,
    clash_curve,
)
from shared.decoders import (
    Decoder,
    DecoderRegistry,
    LocalParityDecoder,
    LocalTableDecoder,
    OracleDecoder,
    PlugInTable,
    SymmetrizedDecoder,
    default_registry,
    erm_u_measurable,
    pivot_success,
    product_bound_experiment,
    self_reduction_check,
    symmetrization_preservation,
    synthetic_plugin_check,
    train_plugin_table,
    wrap_erm,
)
from shared.ensemble import (
    EnsembleParams,
    KMode,
    Mask,
    all_solutions,
    apply_mask,
    count_solutions_capped,
    ensemble_summary,
    sample_base_cnf,
    sample_blocks,
    sample_tuple,
    verify_witness,
    vv_isolation_rate,
)
from shared.exceptions import BudgetExceededError, ConfigurationError, LabError, UnknownDecoderError
from shared.factor_graph import build_factor_graph, extract_neighborhood
from shared.gf2 import BitVector
from shared.hashing import Rng, default_kappa, default_symmetrization_draws
from shared.ledger import union_bound_curve
from shared.locality import sign_marginals_by_shape, sparsification_experiment, tree_likeness_trend
from shared.sils import SilsSpec, SilsVector, check_invariance, extract_sils
from shared.symmetry import (
    exchangeability_check,
    exchangeability_records,
    involution_Ti,
    measure_preservation_check,
    neutrality_from_blocks,
)

from app.core.config import ExperimentConfig
from app.core.exceptions import wrap_unexpected
from app.core.logging_config import StructuredLogger, get_logger
from app.models.reports import CheckResult, Report
from app.utils.validation import check_enumeration_budget, validate_ensemble

SUBCOMMANDS = (
    "sample",
    "neutrality",
    "sparsify",
    "treelike",
    "isolate",
    "switch",
    "success",
    "codec",
    "clash",
    "selftest",
)


@dataclass
class Outcome:
    """What one experiment contributes to a report."""

    payload: Dict[str, Any] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)

    def merge(self, other: "Outcome", prefix: str) -> None:
        self.payload[prefix] = other.payload
        self.checks.extend(other.checks)
        for name, table in other.tables.items():
            self.tables[f"{prefix}_{name}"] = table


def _check(name: str, passed: bool, criterion: Optional[int] = None, **detail) -> CheckResult:
    return CheckResult(name=name, criterion=criterion, passed=bool(passed), detail=detail)


def _table_summary(table) -> Dict[str, Any]:
    tested = [row for row in table.buckets if row.count >= table.min_bucket]
    worst = max(tested, key=lambda row: abs(row.p_hat - 0.5) / row.band, default=None)
    return {
        "view": table.view.value,
        "min_bucket": table.min_bucket,
        "tested_buckets": len(tested),
        "flagged": table.flagged,
        "small_bucket_mass": table.small_bucket_mass,
        "worst": worst.model_dump(mode="json") if worst else None,
    }


def _sign_sensitive_extractor(F, spec: SilsSpec) -> SilsVector:
    """Planted negative control: appends the parity of the negative-literal count."""
    z = extract_sils(F, spec)
    return SilsVector(bits=z.bits | ((F.negative_literal_count() & 1) << z.r_m), r_m=z.r_m + 1)


class ExperimentService:
    """Runs lab experiments for a fixed configuration."""

    def __init__(self, config: ExperimentConfig, table: Optional[PlugInTable] = None, profile: str = "full"):
        self.config = config
        self.profile = profile
        self.logger = get_logger("experiments")
        self.structured_logger = StructuredLogger("experiments")
        self.params: EnsembleParams = validate_ensemble(EnsembleParams(**config.ensemble.model_dump()))
        self.spec: SilsSpec = config.sils
        self.rng = Rng(config.seed)
        self._table = table
        self._registry: Optional[DecoderRegistry] = None
        self.last_tables: Dict[str, pd.DataFrame] = {}

    # -- plumbing ---------------------------------------------------------------

    @property
    def workers(self) -> int:
        return self.config.workers

    @property
    def mode(self):
        return self.config.wrapper.backmap

    def params_for(self, m: int, **updates) -> EnsembleParams:
        return validate_ensemble(self.params.model_copy(update={"m": m, **updates}))

    def table(self) -> Optional[PlugInTable]:
        if self._table is None and self.config.decoder.table_path:
            path = Path(self.config.decoder.table_path)
            if not path.exists():
                raise ConfigurationError(f"Plug-in table not found: {path}", config_key="decoder.table_path")
            self._table = PlugInTable.from_bytes(path.read_bytes())
        return self._table

    def registry(self) -> DecoderRegistry:
        if self._registry is None:
            self._registry = default_registry(
                self.spec,
                self.table(),
                self.params.max_coset_dim,
                self.config.decoder.rule_seed,
            )
        return self._registry

    def decoder(self) -> Decoder:
        try:
            return self.registry().by_name(self.config.decoder.name)
        except UnknownDecoderError as e:
            raise ConfigurationError(
                f"Decoder '{self.config.decoder.name}' is not registered",
                config_key="decoder.name",
                details={"registered": self.registry().names()},
            ) from e

    def wrapper_defaults(self, m: int, t: int) -> Tuple[int, int]:
        s = self.config.wrapper.s or default_symmetrization_draws(m, t)
        kappa = self.config.wrapper.kappa or default_kappa(m, t)
        return s, kappa

    def run(self, subcommand: str) -> Report:
        """
        Execute one subcommand and build its report.

        Raises:
            ConfigurationError: unknown subcommand or invalid settings
            BudgetExceededError: enumeration or trial budget exceeded
        """
        handlers: Dict[str, Callable[[Rng], Outcome]] = {
            "sample": self.sample,
            "neutrality": self.neutrality,
            "sparsify": self.sparsify,
            "treelike": self.treelike,
            "isolate": self.isolate,
            "switch": self.switch,
            "success": self.success,
            "codec": self.codec,
            "clash": self.clash,
        }
        if subcommand == "selftest":
            from app.services.selftest import SelfTestService

            return SelfTestService(self, self.profile).run()
        if subcommand not in handlers:
            raise ConfigurationError(
                f"Unknown subcommand '{subcommand}'",
                config_key="subcommand",
                details={"valid": list(SUBCOMMANDS)},
            )

        self.structured_logger.experiment_started(subcommand, self.config.seed, self.workers)
        start = time.perf_counter()
        try:
            outcome = handlers[subcommand](self.rng.substream(subcommand))
        except LabError:
            raise
        except Exception as e:
            raise wrap_unexpected(e) from e
        elapsed = time.perf_counter() - start
        report = self.build_report(subcommand, outcome, elapsed)
        self.structured_logger.experiment_completed(subcommand, report.passed, elapsed * 1000)
        self.last_tables = outcome.tables
        return report

    def build_report(
        self, subcommand: str, outcome: Outcome, elapsed: float, config: Optional[ExperimentConfig] = None
    ) -> Report:
        config = config or self.config
        for check in outcome.checks:
            self.structured_logger.assertion_checked(check.name, check.passed, check.criterion)
        return Report(
            artifact_version=__version__,
            subcommand=subcommand,
            seed=f"0x{self.config.seed:016x}",
            config=config.report_view(),
            payload=outcome.payload,
            checks=outcome.checks,
            passed=all(c.passed for c in outcome.checks),
            wall_clock_seconds=round(elapsed, 3) if self.config.output.include_timing else None,
        )

    # -- experiments ------------------------------------------------------------

    def sample(self, rng: Rng) -> Outcome:
        """Rejection-sampled blocks and the involution suite."""
        n = self.config.trials.involution_blocks
        blocks = sample_blocks(self.params, n, rng, "block", self.workers)
        involution_ok = witness_ok = unique_ok = 0
        for j, block in enumerate(blocks):
            inst, x = block.instance, block.witness.x
            bits_ok = witness_bits_ok = True
            for i in range(inst.m):
                flipped = involution_Ti(inst, i)
                bits_ok &= involution_Ti(flipped, i) == inst
                witness_bits_ok &= flipped.witness.x == x.flip(i) and verify_witness(flipped, x.flip(i))
            involution_ok += int(bits_ok)
            witness_ok += int(witness_bits_ok)
            i = rng.substream("recount", j).integer(0, inst.m)
            recount = count_solutions_capped(involution_Ti(inst, i).public(), 2, self.params.max_coset_dim)
            unique_ok += int(recount == 1)

        summary = ensemble_summary(blocks)
        payload = {
            "m": self.params.m,
            "n_blocks": n,
            "mean_trials": float(summary["trials"].mean()),
            "mean_k": float(summary["k"].mean()),
            "mean_witness_weight": float(summary["witness_weight"].mean()),
            "involution_identity": involution_ok,
            "witness_shift": witness_ok,
            "unique_after_flip": unique_ok,
        }
        checks = [
            _check("involution_identity", involution_ok == n, 1, blocks=n, passed_blocks=involution_ok),
            _check("witness_shift", witness_ok == n, 1, blocks=n, passed_blocks=witness_ok),
            _check("uniqueness_recount", unique_ok == n, 1, blocks=n, passed_blocks=unique_ok),
        ]
        return Outcome(payload=payload, checks=checks, tables={"blocks": summary})

    def neutrality(self, rng: Rng) -> Outcome:
        """Per-bit neutrality given the sketch, measure preservation and sketch invariance."""
        trials = self.config.trials
        blocks = sample_blocks(self.params, trials.neutrality_blocks, rng, "neutrality", self.workers)
        report = neutrality_from_blocks(blocks, self.spec, trials.neutrality_min_bucket)
        preservation = measure_preservation_check(blocks, rng.substream("measure"))

        invariant = 0
        controls_caught = 0
        length_ok = True
        bound = self.spec.length_bound(self.params.m)
        for r in range(trials.invariance_triples):
            sub = rng.substream("invariance", r)
            F = sample_base_cnf(self.params, sub)
            result = check_invariance(F, self.spec, 2, sub)
            invariant += int(result.passed)
            length_ok &= extract_sils(apply_mask(F, Mask.sample(F.m, sub)), self.spec).r_m <= bound
            control = check_invariance(F, self.spec, 2, sub.substream("control"), _sign_sensitive_extractor)
            controls_caught += int(not control.passed)

        tables = {
            "sils": pd.DataFrame([row.model_dump(mode="json") for row in report.sils.buckets]),
            "control": pd.DataFrame([row.model_dump(mode="json") for row in report.control.buckets]),
        }
        payload = {
            "m": report.m,
            "n_blocks": report.n_blocks,
            "marginals": report.marginals,
            "marginal_band": report.marginal_band,
            "sils": _table_summary(report.sils),
            "control": _table_summary(report.control),
            "measure_preservation": preservation.model_dump(mode="json"),
            "invariance": {
                "triples": trials.invariance_triples,
                "invariant": invariant,
                "length_bound": bound,
                "negative_control_caught": controls_caught,
            },
        }
        checks = [
            _check("neutrality_sils_buckets", report.sils.flagged == 0 and report.marginals_within_band, 3,
                   flagged=report.sils.flagged),
            _check("neutrality_negative_control", report.control.flagged > 0, 3, flagged=report.control.flagged),
            _check("measure_preservation", preservation.passed, None,
                   p_values={t.statistic: t.p_value for t in preservation.tests}),
            _check("sils_invariance", invariant == trials.invariance_triples, 4,
                   invariant=invariant, triples=trials.invariance_triples),
            _check("sils_length", length_ok, 4, bound=bound),
        ]
        return Outcome(payload=payload, checks=checks, tables=tables)

    def sparsify(self, rng: Rng) -> Outcome:
        """Bias within local-input and chart groups; edge-sign marginals per shape."""
        loc = self.config.locality
        r = loc.radius if loc.radius is not None else self.params.default_radius
        report = sparsification_experiment(
            self.params, r, loc.sparsify_blocks, rng, self.spec, loc.min_group, self.workers
        )
        patterns = []
        for j in range(loc.tree_samples):
            sub = rng.substream("shape", j)
            signed = apply_mask(sample_base_cnf(self.params, sub), Mask.sample(self.params.m, sub))
            patterns.append(extract_neighborhood(build_factor_graph(signed), sub.integer(0, self.params.m), 1))
        shapes = sign_marginals_by_shape(patterns)
        payload = {
            "m": report.m,
            "radius": r,
            "n_blocks": report.n_blocks,
            "u_groups": {
                "tested": len(report.u_groups.groups),
                "flagged": report.u_groups.flagged,
                "small_group_mass": report.u_groups.small_group_mass,
            },
            "chart_groups": {
                "tested": len(report.chart_groups.groups),
                "flagged": report.chart_groups.flagged,
                "small_group_mass": report.chart_groups.small_group_mass,
            },
            "sign_marginals": [row.model_dump(mode="json") for row in shapes],
        }
        checks = [
            _check("sparsify_u_groups", report.u_groups.flagged == 0, 6, flagged=report.u_groups.flagged,
                   tested=len(report.u_groups.groups)),
            _check("sparsify_chart_groups", report.chart_groups.flagged == 0, None,
                   flagged=report.chart_groups.flagged),
            _check("sign_marginals_by_shape", not any(row.flagged for row in shapes), None, shapes=len(shapes)),
        ]
        tables = {
            "u_groups": pd.DataFrame([g.model_dump(mode="json") for g in report.u_groups.groups]),
            "chart_groups": pd.DataFrame([g.model_dump(mode="json") for g in report.chart_groups.groups]),
        }
        return Outcome(payload=payload, checks=checks, tables=tables)

    def treelike(self, rng: Rng) -> Outcome:
        """Tree fraction and chart frequencies at growing m.

        Runs on a sparser ensemble (locality.tree_alpha, locality.tree_c1, fixed k);
        the payload labels those values as overrides of the configured ensemble.
        """
        loc = self.config.locality
        overrides = {"alpha": loc.tree_alpha, "c1": loc.tree_c1, "k_mode": KMode.FIXED, "k": None}
        params = self.params.model_copy(update=overrides)
        self.logger.info(
            "Tree-likeness runs on an overridden ensemble",
            alpha=params.alpha, c1=params.c1, configured_alpha=self.params.alpha, configured_c1=self.params.c1,
        )
        report = tree_likeness_trend(params, loc.tree_m_values, loc.tree_radius, loc.tree_samples, rng, self.workers)
        checks = [
            _check("tree_fraction_increases", report.tree_fraction_increases, 6,
                   fractions=[row.tree_fraction for row in report.rows]),
            _check("chart_frequency_drops", report.chart_frequency_drops, 6, ratio=report.chart_frequency_ratio),
        ]
        tables = {"trend": pd.DataFrame([row.model_dump(mode="json") for row in report.rows])}
        payload = report.model_dump(mode="json")
        payload["ensemble_overrides"] = {
            "source": "locality",
            "overridden": {key: params.model_dump(mode="json")[key] for key in overrides},
            "configured": {key: self.params.model_dump(mode="json")[key] for key in overrides},
        }
        return Outcome(payload=payload, checks=checks, tables=tables)

    def isolate(self, rng: Rng) -> Outcome:
        """VV isolation rate on satisfiable formulas with 2..max solutions."""
        trials = self.config.trials
        m = trials.isolation_m
        check_enumeration_budget(m, self.params.max_coset_dim, "isolate")
        params = self.params_for(m)
        formulas = []
        attempts = 0
        limit = 1000 * trials.isolation_formulas
        while len(formulas) < trials.isolation_formulas:
            if attempts >= limit:
                raise BudgetExceededError(
                    "Too few formulas with a solution count in range",
                    budget="isolation_attempts",
                    details={"found": len(formulas), "attempts": attempts},
                )
            sub = rng.substream("formula", attempts)
            attempts += 1
            signed = apply_mask(sample_base_cnf(params, sub), Mask.sample(m, sub))
            count = int(all_solutions(signed).size)
            if 2 <= count <= trials.isolation_max_solutions:
                formulas.append(signed)

        results = [
            vv_isolation_rate(F, rng.substream("draws", j), trials.isolation_draws)
            for j, F in enumerate(formulas)
        ]
        rows = pd.DataFrame([r.model_dump(mode="json") for r in results])
        payload = {
            "m": m,
            "formulas": len(formulas),
            "attempts": attempts,
            "draws": trials.isolation_draws,
            "min_rate": float(rows["rate"].min()),
            "mean_rate": float(rows["rate"].mean()),
        }
        failed = int((~rows["passed"]).sum())
        checks = [_check("isolation_rate", failed == 0, 2, failed=failed, formulas=len(formulas))]
        return Outcome(payload=payload, checks=checks, tables={"isolation": rows})

    def switch(self, rng: Rng) -> Outcome:
        """Symmetrization success preservation, calibration, and the ERM plug-in rule."""
        trials = self.config.trials
        m = trials.symmetrization_m
        params = self.params_for(m)
        t = self.config.wrapper.t or params.default_t
        s, kappa = self.wrapper_defaults(m, t)
        P = self.decoder()
        if isinstance(P, OracleDecoder):
            raise ConfigurationError("switch needs a local decoder, not the oracle", config_key="decoder.name")

        blocks = sample_blocks(params, trials.symmetrization_blocks, rng, "switch", self.workers)
        preservation = symmetrization_preservation(P, blocks, s, kappa, rng.substream("sym"), t, self.mode)

        identity_ok = True
        for start in range(0, min(len(blocks), 10 * t), t):
            chunk = [b.instance.public() for b in blocks[start : start + t]]
            zero = SymmetrizedDecoder(P, 1, kappa, 0, self.mode, zero_flips=True)
            identity_ok &= zero.predict(chunk) == P.predict(chunk)

        exchange_blocks = blocks[: trials.exchange_blocks]
        records = exchangeability_records(
            exchange_blocks,
            lambda inst: P.predict([inst])[0],
            self.spec,
            rng.substream("exchange"),
            self.mode,
        )
        exchange = exchangeability_check(records, trials.exchange_min_bucket)

        erm = wrap_erm(
            P,
            rng.substream("erm").word(64),
            s,
            kappa,
            rng.substream("erm-sym"),
            self.config.wrapper.train_fraction,
            self.spec,
            self.mode,
        )
        tuple_blocks = [b.instance.public() for b in blocks[:t]]
        run = erm.run(tuple_blocks)
        measurable = erm_u_measurable(run, tuple_blocks, self.spec)
        plug_in = synthetic_plugin_check(trials.erm_train, rng.substream("plugin"))

        payload = {
            "m": m,
            "t": t,
            "s": s,
            "kappa": kappa,
            "decoder": P.identifier,
            "symmetrization": preservation.model_dump(mode="json"),
            "zero_flip_identity": identity_ok,
            "exchangeability": {
                "buckets": len(exchange.rows),
                "flagged": sum(1 for row in exchange.rows if row.flagged),
            },
            "erm": {
                "train": list(run.split.train),
                "test": list(run.split.test),
                "table_keys": run.table.size(),
                "u_measurable": measurable,
                "description_bits": erm.description_length().description_bits,
            },
            "plug_in": plug_in.model_dump(mode="json"),
        }
        checks = [
            _check("symmetrization_preservation", preservation.passed, 5,
                   difference=preservation.difference, band=preservation.band),
            _check("zero_flip_identity", identity_ok, None),
            _check("exchangeability", exchange.passed, None, buckets=len(exchange.rows)),
            _check("plug_in_bayes_agreement", plug_in.passed, 9, disagreement=plug_in.disagreement),
            _check("erm_u_measurable", measurable, 9, test_blocks=len(run.split.test)),
        ]
        tables = {"exchangeability": pd.DataFrame([row.model_dump(mode="json") for row in exchange.rows])}
        return Outcome(payload=payload, checks=checks, tables=tables)

    def fixed_plugin_decoder(self, params: EnsembleParams, rng: Rng) -> Decoder:
        """The configured decoder, or a plug-in table trained here when none is loaded."""
        if self.config.decoder.name != "local-table" or self.table() is not None:
            return self.decoder()
        t = params.default_t
        s, kappa = self.wrapper_defaults(params.m, t)
        blocks = sample_blocks(params, 4 * t, rng, "train", self.workers)
        table = train_plugin_table(
            LocalParityDecoder(),
            [b.instance.public() for b in blocks],
            s,
            kappa,
            rng.word(64),
            self.spec,
            self.mode,
            t,
        )
        self._table = table
        self._registry = None
        return LocalTableDecoder(table, self.spec)

    def success(self, rng: Rng) -> Outcome:
        """Pivot bound, product bound with the union-bound curve, and bit-fixing self-reduction."""
        trials = self.config.trials
        ub = self.config.union_bound
        params = self.params_for(trials.success_m)
        D = self.fixed_plugin_decoder(params, rng.substream("plug-in"))
        pivot = self.config.decoder.pivot
        if pivot >= params.m:
            raise ConfigurationError(f"Pivot {pivot} is outside [0, {params.m})", config_key="decoder.pivot")

        report = product_bound_experiment(
            D,
            trials.success_t,
            trials.success_tuples,
            rng.substream("product"),
            params,
            pivot,
            ub.delta,
            ub.gamma,
            ub.epsilon,
            self.workers,
        )
        pivot_blocks = sample_blocks(params, min(trials.success_tuples, 10_000), rng, "pivot", self.workers)
        rates = pivot_success(D, pivot, [b.instance for b in pivot_blocks], [b.witness.x for b in pivot_blocks])

        check_enumeration_budget(self.params.m, self.params.max_coset_dim, "self-reduction")
        reduce_blocks = sample_blocks(self.params, trials.self_reduce_blocks, rng, "self-reduce", self.workers)
        reduction = self_reduction_check(reduce_blocks, self.params.max_coset_dim)

        payload = {
            "decoder": D.identifier,
            "product_bound": report.model_dump(mode="json"),
            "pivot": rates.model_dump(mode="json"),
            "self_reduction": reduction.model_dump(mode="json"),
        }
        checks = [
            _check("product_bound", report.exact.within_band and report.pivot_bits.within_band, 10,
                   all_success=report.exact.all_success, product=report.exact.product, band=report.exact.band),
            _check("pairwise_independence", report.independence.passed, None,
                   corrected_alpha=report.independence.corrected_alpha),
            _check("pivot_inequality", rates.block_rate <= rates.pivot_rate, None,
                   block_rate=rates.block_rate, pivot_rate=rates.pivot_rate),
            _check("self_reduction", reduction.passed, 8,
                   matches=reduction.witnesses_match, exact_calls=reduction.exact_call_counts),
        ]
        tables = {
            "per_bit_rates": pd.DataFrame(report.per_bit_rates).rename(columns=lambda c: f"bit_{c}"),
        }
        return Outcome(payload=payload, checks=checks, tables=tables)

    def codec(self, rng: Rng) -> Outcome:
        """Round trips and ledger bounds of both codecs, plus the rank bijection."""
        trials = self.config.trials
        D = self.decoder()
        registry = self.registry()
        if isinstance(D, OracleDecoder):
            check_enumeration_budget(self.params.m, self.params.max_coset_dim, "codec")

        rows = []
        for run in range(trials.codec_runs):
            blocks = sample_tuple(trials.codec_t, self.params, rng.substream("run", run), self.workers)
            rows.append(audit(D, [b.instance.public() for b in blocks], [b.witness.x for b in blocks], registry, run))

        run = trials.codec_runs
        for t in sorted({1, 5, trials.codec_t}):
            blocks = sample_tuple(t, self.params, rng.substream("adversarial", t), self.workers)
            instances = [b.instance.public() for b in blocks]
            predictions = D.predict(instances)
            for pattern in ADVERSARIAL_PATTERNS:
                truths = adversarial_truths(predictions, pattern, rng.substream("pattern", t, pattern))
                rows.append(audit(D, instances, truths, registry, run, pattern, predictions))
                run += 1

        bijective = rank_bijection_holds(12)
        frame = pd.DataFrame([row.model_dump(mode="json") for row in rows])
        payload = {
            "decoder": D.identifier,
            "runs": len(rows),
            "adversarial_runs": int((frame["pattern"] != "sampled").sum()),
            "min_coarse_slack": int((frame["coarse_bound"] - frame["coarse_total"]).min()),
            "min_fine_slack": int((frame["fine_bound"] - frame["fine_total"]).min()),
            "rank_bijection_n12": bijective,
            "label": rows[0].label if rows else "upper bound (ledger)",
        }
        checks = [
            _check("codec_round_trip", bool(frame["round_trip"].all()), 7, runs=len(rows)),
            _check("coarse_ledger_bound", bool(frame["coarse_within_bound"].all()), 7),
            _check("fine_ledger_bound", bool(frame["fine_within_bound"].all()), 7),
            _check("rank_bijection", bijective, 7, n=12),
        ]
        return Outcome(payload=payload, checks=checks, tables={"audit": frame})

    def clash(self, rng: Rng) -> Outcome:
        return self.clash_demo(rng)

    def clash_demo(self, rng: Rng) -> Outcome:
        """Oracle description length against the patched ledgers of the local decoders.

        Every decoder, the oracle included, encodes the same tuples with the fine
        codec at every t; the oracle's patched bits must not move with t.
        """
        trials = self.config.trials
        ub = self.config.union_bound
        params = self.params
        check_enumeration_budget(params.m, params.max_coset_dim, "clash")
        t_values = trials.clash_t_values or list(range(4, params.default_t + 1))
        registry = self.registry()

        oracle = registry.by_name(OracleDecoder.name)
        description_bits = oracle.description_length().description_bits
        measured = clash_curve(oracle, params, t_values, trials.clash_tuples, rng.substream("local"), self.workers)
        patched = [p.mean_patched_bits for p in measured.points]
        constant = (
            all(p.patched_spread == 0 for p in measured.points)
            and all(bits == description_bits for bits in patched)
            and all(p.mean_payload_bits == 0.0 for p in measured.points)
        )
        residual_free = all(p.tuple_success == 1.0 for p in measured.points)

        curves = [
            clash_curve(D, params, t_values, trials.clash_tuples, rng.substream("local"), self.workers)
            for D in registry.local_decoders()
        ]
        best = min(curves, key=lambda c: (sum(p.mean_patched_bits for p in c.points), c.decoder))
        gamma = ub.gamma if ub.gamma is not None else 1.0
        delta = ub.delta if ub.delta is not None else gamma / 8
        union = union_bound_curve(delta, gamma, ub.epsilon, t_values, ub.eta)

        table = pd.DataFrame(
            {
                "t": t_values,
                "oracle_patched_bits": patched,
                "oracle_ledger_bits": [p.mean_ledger_bits for p in measured.points],
                "local_patched_bits": [p.mean_patched_bits for p in best.points],
                "local_ledger_bits": [p.mean_ledger_bits for p in best.points],
                "local_tuple_success": [p.tuple_success for p in best.points],
                "union_log2_bound": [row.log2_bound for row in union.rows],
            }
        )
        payload = {
            "m": params.m,
            "t_values": t_values,
            "oracle": {
                "decoder": oracle.identifier,
                "description_bits": description_bits,
                "residual_free": residual_free,
                "curve": measured.model_dump(mode="json"),
            },
            "local": [c.model_dump(mode="json") for c in curves],
            "best_local": best.decoder,
            "union_bound": union.model_dump(mode="json"),
        }
        checks = [
            _check("oracle_ledger_constant", constant and residual_free, 10,
                   patched_bits=patched, slope=measured.slope_bits_per_block),
            _check("local_ledger_grows", best.slope_bits_per_block > 0, 10,
                   slope=best.slope_bits_per_block, at_least_one_bit=best.slope_bits_per_block >= 1.0),
        ]
        return Outcome(payload=payload, checks=checks, tables={"curves": table})


def rank_bijection_holds(n: int) -> bool:
    """Exhaustive check that rank and unrank are inverse bijections on all subsets of [0, n)."""
    seen: Dict[int, set] = {w: set() for w in range(n + 1)}
    for word in range(1 << n):
        subset = BitVector(word, n).support()
        rank = binomial_rank(subset, n)
        if binomial_unrank(n, len(subset), rank) != subset:
            return False
        seen[len(subset)].add(rank)
    return all(seen[w] == set(range(math.comb(n, w))) for w in seen)

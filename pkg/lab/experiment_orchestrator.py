"""Experiment orchestration.

Each experiment sweeps one leakage parameter and runs paired leaky and clean
executions of the same pipeline on the same data with the same seeds. Seeds
derive from the experiment seed through ``numpy.random.SeedSequence`` spawn
keys: the repeat's dataset uses ``(repeat,)`` and each execution uses
``(repeat, fold)``, so results do not depend on worker scheduling.

Every execution is audited as it finishes: a clean run must leave no
violation, and a leaky run whose leak is active must leave at least one.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from lab.models.audit import AuditLog
from lab.models.experiment import CONDITIONS, Condition, RawResult, TrendSeries, aggregate
from lab.models.plan import (
    EvaluateStep,
    LabelFeatureStep,
    PipelinePlan,
    PlanStep,
    PreprocessStep,
    ScopePolicy,
    SplitStep,
    SynthesizeStep,
    TrainStep,
)
from lab.pipeline import ExecutionResult, execute
from lab.seeding import derive_seed
from lab.split import contamination_count, kfold_stratified
from lab.synth import (
    apply_shift,
    compose_frankenstein,
    gen_blobs,
    gen_drifting_windows,
    gen_multisource,
)
from shared.errors import AuditInvariantError, ConfigError
from shared.models.config import BlobConfig, ExperimentConfig, FrankensteinPlan
from shared.models.dataset import Dataset, SplitPair
from shared.utils.duplicates import provenance_overlap

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentOrchestrator",
    "aggregate",
    "run_experiment",
    "run_frankenstein",
    "run_label_delta",
    "run_smote_overlap",
    "run_normalization_shift",
    "run_set_intersection",
    "run_window_overlap",
    "run_distribution_shift",
]

CLEAN = ScopePolicy(mode="clean")
LEAKY = ScopePolicy(mode="leaky")

# child stream of the repeat's dataset seed used for fold assignment
_PARTITION_KEY = 1


@dataclass(frozen=True)
class _Outcome:
    sweep_index: int
    condition: Condition
    repeat: int
    fold: int
    accuracy: float
    audit: AuditLog


class ExperimentOrchestrator:
    """Runs one configured experiment and collects its trend series."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._train = TrainStep(config=cfg.train)
        self._repeat_runners: dict[str, Callable[[int], list[_Outcome]]] = {
            "frankenstein": self._repeat_frankenstein,
            "label_delta": self._repeat_label_delta,
            "smote_overlap": self._repeat_smote_overlap,
            "normalization_shift": self._repeat_normalization_shift,
            "set_intersection": self._repeat_set_intersection,
            "window_overlap": self._repeat_window_overlap,
            "distribution_shift": self._repeat_distribution_shift,
        }

    # ------------------------------------------------------------------
    # Driver
    # ------------------------------------------------------------------

    def run(self) -> TrendSeries:
        cfg = self.cfg
        runner = self._repeat_runners[cfg.kind]
        logger.info(
            f"Running {cfg.kind}: {len(cfg.sweep)} sweep values, {cfg.repeats} repeats, "
            f"{cfg.folds} fold(s), {cfg.workers} worker(s)"
        )
        if cfg.workers == 1:
            batches = [runner(r) for r in range(cfg.repeats)]
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                batches = list(pool.map(runner, range(cfg.repeats)))

        outcomes = [o for batch in batches for o in batch]
        outcomes.sort(
            key=lambda o: (o.sweep_index, CONDITIONS.index(o.condition), o.repeat, o.fold)
        )
        raw = [
            RawResult(
                experiment=cfg.kind,
                param=cfg.sweep[o.sweep_index],
                condition=o.condition,
                repeat=o.repeat,
                fold=o.fold,
                accuracy=o.accuracy,
            )
            for o in outcomes
        ]
        return TrendSeries(
            experiment=cfg.kind,
            sweep=list(cfg.sweep),
            repeats=cfg.repeats,
            folds=cfg.folds,
            raw=raw,
            audits=[o.audit for o in outcomes],
        )

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _dataset_seed(self, repeat: int) -> int:
        return derive_seed(self.cfg.seed, repeat)

    def _execution_seed(self, repeat: int, fold: int) -> int:
        return derive_seed(self.cfg.seed, repeat, fold)

    def _blob(self, repeat: int) -> BlobConfig:
        return self.cfg.blob.model_copy(update={"seed": self._dataset_seed(repeat)})

    def _fold_pairs(self, ds: Dataset, repeat: int) -> list[SplitPair]:
        seed = derive_seed(self._dataset_seed(repeat), _PARTITION_KEY)
        return list(kfold_stratified(ds, self.cfg.folds, seed).pairs())

    def _plan(self, *steps: PlanStep) -> PipelinePlan:
        return PipelinePlan((*steps, self._train, EvaluateStep()))

    def _label(self, sweep_index: int, condition: Condition, repeat: int, fold: int) -> str:
        param = format(self.cfg.sweep[sweep_index], "g")
        return f"{self.cfg.kind}:{param}:{condition}:r{repeat}:f{fold}"

    def _execute(
        self,
        plan: PipelinePlan,
        ds: Dataset,
        policy: ScopePolicy,
        seed: int,
        label: str,
        leak_active: bool,
    ) -> ExecutionResult:
        result = execute(plan, ds, policy, seed, run=label)
        violations = result.violations
        if policy.mode == "clean" and violations:
            raise AuditInvariantError(label, "no violations", violations)
        if policy.mode == "leaky" and leak_active and not violations:
            raise AuditInvariantError(label, "at least one violation", violations)
        logger.debug(f"{label}: accuracy={result.accuracy:.4f} violations={len(violations)}")
        return result

    def _outcome(
        self,
        sweep_index: int,
        condition: Condition,
        repeat: int,
        fold: int,
        result: ExecutionResult,
    ) -> _Outcome:
        return _Outcome(sweep_index, condition, repeat, fold, result.accuracy, result.audit)

    def _cached(self, cached: _Outcome, sweep_index: int) -> _Outcome:
        """The clean outcome of another sweep value, which does not depend on it."""
        label = self._label(sweep_index, cached.condition, cached.repeat, cached.fold)
        return _Outcome(
            sweep_index,
            cached.condition,
            cached.repeat,
            cached.fold,
            cached.accuracy,
            cached.audit.relabel(label),
        )

    def _paired(
        self,
        plan: PipelinePlan,
        ds: Dataset,
        sweep_index: int,
        repeat: int,
        fold: int,
        leak_active: bool,
    ) -> list[_Outcome]:
        seed = self._execution_seed(repeat, fold)
        outcomes = []
        pairs: tuple[tuple[Condition, ScopePolicy], ...] = (("leaky", LEAKY), ("clean", CLEAN))
        for condition, policy in pairs:
            label = self._label(sweep_index, condition, repeat, fold)
            result = self._execute(plan, ds, policy, seed, label, leak_active)
            outcomes.append(self._outcome(sweep_index, condition, repeat, fold, result))
        return outcomes

    # ------------------------------------------------------------------
    # Per-experiment repeats
    # ------------------------------------------------------------------

    def _repeat_frankenstein(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        composition = FrankensteinPlan(
            stages=int(max(cfg.sweep)) + 1,
            fresh_per_stage=cfg.frankenstein.fresh_per_stage,
            dup_fraction=cfg.frankenstein.dup_fraction,
        )
        cumulative = compose_frankenstein(composition, self._blob(repeat))
        outcomes: list[_Outcome] = []
        for si, stage in enumerate(cfg.sweep):
            ds = cumulative[int(stage)]
            logger.info(f"frankenstein repeat {repeat}: stage {int(stage)} with {ds.n_rows} rows")
            for fold, pair in enumerate(self._fold_pairs(ds, repeat)):
                shared = provenance_overlap(
                    ds.provenance[pair.train_indices], ds.provenance[pair.eval_indices]
                )
                plan = self._plan(
                    SplitStep(strategy="fixed", pair=pair, on_shared="drop_eval"),
                    PreprocessStep("standardize", pinned=True),
                )
                outcomes += self._paired(plan, ds, si, repeat, fold, leak_active=shared.size > 0)
        return outcomes

    def _repeat_label_delta(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        ds = gen_blobs(self._blob(repeat))
        seed = self._execution_seed(repeat, 0)
        outcomes: list[_Outcome] = []
        clean: _Outcome | None = None
        for si, delta in enumerate(cfg.sweep):
            plan = self._plan(
                LabelFeatureStep(delta),
                SplitStep(strategy="holdout", eval_fraction=cfg.eval_fraction),
                PreprocessStep("standardize", pinned=True),
            )
            label = self._label(si, "leaky", repeat, 0)
            # the leaky column is built from every row's label, eval rows included,
            # so the audit flags it even at delta 0 where accuracy matches clean
            result = self._execute(plan, ds, LEAKY, seed, label, leak_active=True)
            outcomes.append(self._outcome(si, "leaky", repeat, 0, result))
            if clean is None:
                label = self._label(si, "clean", repeat, 0)
                result = self._execute(plan, ds, CLEAN, seed, label, leak_active=False)
                clean = self._outcome(si, "clean", repeat, 0, result)
                outcomes.append(clean)
            else:
                outcomes.append(self._cached(clean, si))
            logger.info(f"label_delta repeat {repeat}: delta={delta:g} done")
        return outcomes

    def _repeat_smote_overlap(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        ds = gen_blobs(self._blob(repeat))
        outcomes: list[_Outcome] = []
        for fold, pair in enumerate(self._fold_pairs(ds, repeat)):
            plan = self._plan(
                SplitStep(strategy="fixed", pair=pair),
                PreprocessStep("standardize", pinned=True),
                SynthesizeStep("smote", k=cfg.smote_k),
            )
            seed = self._execution_seed(repeat, fold)
            clean: _Outcome | None = None
            for si, ratio in enumerate(cfg.sweep):
                policy = ScopePolicy(mode="leaky", eval_exposure=ratio)
                label = self._label(si, "leaky", repeat, fold)
                result = self._execute(plan, ds, policy, seed, label, leak_active=ratio > 0)
                outcomes.append(self._outcome(si, "leaky", repeat, fold, result))
                if clean is None:
                    label = self._label(si, "clean", repeat, fold)
                    result = self._execute(plan, ds, CLEAN, seed, label, leak_active=False)
                    clean = self._outcome(si, "clean", repeat, fold, result)
                    outcomes.append(clean)
                else:
                    outcomes.append(self._cached(clean, si))
            logger.info(f"smote_overlap repeat {repeat}: fold {fold} done")
        return outcomes

    def _repeat_normalization_shift(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        ds = gen_blobs(self._blob(repeat))
        outcomes: list[_Outcome] = []
        for fold, pair in enumerate(self._fold_pairs(ds, repeat)):
            plan = self._plan(SplitStep(strategy="fixed", pair=pair), PreprocessStep("standardize"))
            for si, shift in enumerate(cfg.sweep):
                shifted = apply_shift(ds, shift, pair.eval_indices)
                outcomes += self._paired(plan, shifted, si, repeat, fold, leak_active=True)
            logger.info(f"normalization_shift repeat {repeat}: fold {fold} done")
        return outcomes

    def _repeat_set_intersection(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        ds = gen_blobs(self._blob(repeat))
        outcomes: list[_Outcome] = []
        for fold, pair in enumerate(self._fold_pairs(ds, repeat)):
            seed = self._execution_seed(repeat, fold)
            clean: _Outcome | None = None
            for si, fraction in enumerate(cfg.sweep):
                plan = self._plan(
                    SplitStep(strategy="fixed", pair=pair, contamination=fraction),
                    PreprocessStep("standardize", pinned=True),
                )
                copied = contamination_count(pair.eval_indices.size, fraction)
                label = self._label(si, "leaky", repeat, fold)
                result = self._execute(plan, ds, LEAKY, seed, label, leak_active=copied > 0)
                outcomes.append(self._outcome(si, "leaky", repeat, fold, result))
                if clean is None:
                    label = self._label(si, "clean", repeat, fold)
                    result = self._execute(plan, ds, CLEAN, seed, label, leak_active=False)
                    clean = self._outcome(si, "clean", repeat, fold, result)
                    outcomes.append(clean)
                else:
                    outcomes.append(self._cached(clean, si))
            logger.info(f"set_intersection repeat {repeat}: fold {fold} done")
        return outcomes

    def _repeat_window_overlap(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        length = cfg.window_length_or_default()
        blob = self._blob(repeat)
        outcomes: list[_Outcome] = []
        for si, overlap in enumerate(cfg.sweep):
            train_window, eval_window = gen_drifting_windows(blob, overlap, length)
            ds = Dataset.concat([train_window, eval_window])
            pair = SplitPair(
                np.arange(train_window.n_rows),
                np.arange(train_window.n_rows, ds.n_rows),
                strategy="windows",
            )
            shared = provenance_overlap(train_window.provenance, eval_window.provenance)
            plan = self._plan(SplitStep(strategy="fixed", pair=pair, on_shared="drop_train"))
            outcomes += self._paired(plan, ds, si, repeat, 0, leak_active=shared.size > 0)
            logger.info(f"window_overlap repeat {repeat}: overlap={overlap:g} done")
        return outcomes

    def _repeat_distribution_shift(self, repeat: int) -> list[_Outcome]:
        cfg = self.cfg
        blob = self._blob(repeat)
        outcomes: list[_Outcome] = []
        for si, shift in enumerate(cfg.sweep):
            ds = gen_multisource(blob, cfg.n_sources, shift)
            plan = self._plan(
                SplitStep(
                    strategy="group",
                    group_axis="source",
                    held_out=cfg.n_sources - 1,
                    leaky_strategy="holdout",
                    eval_fraction=1.0 / cfg.n_sources,
                ),
                PreprocessStep("standardize", pinned=True),
            )
            outcomes += self._paired(plan, ds, si, repeat, 0, leak_active=True)
            logger.info(f"distribution_shift repeat {repeat}: shift={shift:g} done")
        return outcomes


# =============================================================================
# Runner entry points
# =============================================================================


def _checked_run(cfg: ExperimentConfig, kind: str) -> TrendSeries:
    if cfg.kind != kind:
        raise ConfigError(f"config is for '{cfg.kind}', not '{kind}'")
    return ExperimentOrchestrator(cfg).run()


def run_frankenstein(cfg: ExperimentConfig) -> TrendSeries:
    """Cumulative stages of a composed dataset; clean drops eval rows duplicating training rows."""
    return _checked_run(cfg, "frankenstein")


def run_label_delta(cfg: ExperimentConfig) -> TrendSeries:
    """Holdout accuracy with a feature that tracks the label by ``delta`` (leaky) or is noise."""
    return _checked_run(cfg, "label_delta")


def run_smote_overlap(cfg: ExperimentConfig) -> TrendSeries:
    """K-fold accuracy when SMOTE may draw on the given share of the eval fold."""
    return _checked_run(cfg, "smote_overlap")


def run_normalization_shift(cfg: ExperimentConfig) -> TrendSeries:
    """K-fold accuracy with shifted eval rows, standardized on train+eval (leaky) or train."""
    return _checked_run(cfg, "normalization_shift")


def run_set_intersection(cfg: ExperimentConfig) -> TrendSeries:
    """K-fold accuracy with a share of each eval fold copied into its training fold."""
    return _checked_run(cfg, "set_intersection")


def run_window_overlap(cfg: ExperimentConfig) -> TrendSeries:
    """Drifting windows sharing rows; clean drops the shared rows from training."""
    return _checked_run(cfg, "window_overlap")


def run_distribution_shift(cfg: ExperimentConfig) -> TrendSeries:
    """Shifted sources pooled at random (leaky) or split by source (clean)."""
    return _checked_run(cfg, "distribution_shift")


RUNNERS: dict[str, Callable[[ExperimentConfig], TrendSeries]] = {
    "frankenstein": run_frankenstein,
    "label_delta": run_label_delta,
    "smote_overlap": run_smote_overlap,
    "normalization_shift": run_normalization_shift,
    "set_intersection": run_set_intersection,
    "window_overlap": run_window_overlap,
    "distribution_shift": run_distribution_shift,
}


def run_experiment(cfg: ExperimentConfig) -> TrendSeries:
    return RUNNERS[cfg.kind](cfg)

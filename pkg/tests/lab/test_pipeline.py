"""Tests for scoped pipeline execution and the audit recomputation."""

from __future__ import annotations

import numpy as np
import pytest

from lab.models.audit import AuditLog, AuditRecord
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
from lab.pipeline import audit_check, execute
from lab.preprocess import moving_average_smooth
from lab.synth import gen_blobs
from shared.errors import InsufficientDataError, PlanError, SplitIndexError
from shared.models.config import BlobConfig, TrainConfig
from shared.models.dataset import Dataset, SplitPair

CLEAN = ScopePolicy(mode="clean")
LEAKY = ScopePolicy(mode="leaky")
_TRAIN = TrainConfig(hidden=(4,), max_epochs=5, learning_rate=0.1)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _make_blobs(n: int = 120, minority_fraction: float = 0.5, seed: int = 0) -> Dataset:
    return gen_blobs(
        BlobConfig(
            n=n,
            d=4,
            n_informative=2,
            separation=2.0,
            minority_fraction=minority_fraction,
            seed=seed,
        )
    )


def _make_plan(*steps: PlanStep, uses_validation: bool = False) -> PipelinePlan:
    return PipelinePlan(
        (*steps, TrainStep(config=_TRAIN, uses_validation=uses_validation), EvaluateStep())
    )


def _standardize_plan() -> PipelinePlan:
    return _make_plan(SplitStep(), PreprocessStep("standardize"))


def _violating_names(result_violations: list) -> set[str]:
    return {v.name for v in result_violations}


# ---------------------------------------------------------------------------
# Plan validation
# ---------------------------------------------------------------------------


class TestPlanValidation:
    def test_needs_one_split(self) -> None:
        with pytest.raises(PlanError, match="split"):
            PipelinePlan((TrainStep(), EvaluateStep()))

    def test_ends_with_train_and_evaluate(self) -> None:
        with pytest.raises(PlanError):
            PipelinePlan((SplitStep(), EvaluateStep(), TrainStep()))

    def test_label_feature_first(self) -> None:
        with pytest.raises(PlanError, match="label_feature"):
            _make_plan(SplitStep(), LabelFeatureStep(delta=1.0))

    def test_temporal_needs_time_index(self) -> None:
        plan = _make_plan(SplitStep(strategy="temporal", cut_time=10))
        with pytest.raises(PlanError, match="time_index"):
            execute(plan, _make_blobs(), CLEAN, seed=0)

    def test_fixed_pair_out_of_range(self) -> None:
        plan = _make_plan(SplitStep(strategy="fixed", pair=SplitPair([0, 1], [500])))
        with pytest.raises(SplitIndexError, match="500"):
            execute(plan, _make_blobs(), CLEAN, seed=0)


# ---------------------------------------------------------------------------
# Preprocessing scope
# ---------------------------------------------------------------------------


class TestPreprocessScope:
    def test_clean_standardize_has_no_violations(self) -> None:
        result = execute(_standardize_plan(), _make_blobs(), CLEAN, 1)
        assert result.violations == []
        assert 0.0 <= result.accuracy <= 1.0

    def test_leaky_standardize_is_flagged(self) -> None:
        result = execute(_standardize_plan(), _make_blobs(), LEAKY, 1)
        assert _violating_names(result.violations) == {"standardize"}
        flagged = [r for r in result.audit.records if r.violation]
        assert [r.role for r in flagged] == ["fit"]

    def test_clean_fit_uses_training_rows_only(self) -> None:
        ds = _make_blobs()
        result = execute(_standardize_plan(), ds, CLEAN, 2)
        ((name, params),) = result.params
        assert name == "standardize"
        expected = ds.features[result.split.train_indices].mean(axis=0)
        assert params.mu == pytest.approx(expected.tolist())

    def test_pinned_step_stays_clean_in_leaky_mode(self) -> None:
        plan = _make_plan(SplitStep(), PreprocessStep("standardize", pinned=True))
        assert execute(plan, _make_blobs(), LEAKY, 1).violations == []

    def test_split_after_fit_in_leaky_mode(self) -> None:
        policy = ScopePolicy(mode="leaky", validation_handling="split_after_fit")
        plan = _make_plan(PreprocessStep("minmax"), SplitStep())
        result = execute(plan, _make_blobs(), policy, 3)
        # fitted on every row before the split
        assert result.params[0][1].fitted_on == 120
        assert _violating_names(result.violations) == {"minmax"}

    def test_partial_exposure_still_flagged(self) -> None:
        policy = ScopePolicy(mode="leaky", eval_exposure=0.1)
        result = execute(_standardize_plan(), _make_blobs(), policy, 4)
        (violation,) = result.violations
        assert len(violation.offending) == 3  # ceil(0.1 * 24)

    def test_knn_impute_fills_from_train(self) -> None:
        ds = _make_blobs()
        features = ds.features.copy()
        features[::7, 1] = np.nan
        ds = ds.with_features(features)
        result = execute(_make_plan(SplitStep(), PreprocessStep("knn_impute", k=3)), ds, CLEAN, 5)
        assert not result.dataset.has_missing()
        assert result.violations == []

    def test_moving_average_segments_smoothed_separately(self) -> None:
        base = _make_blobs(n=100)
        ds = Dataset.from_arrays(base.features, base.labels, time_index=np.arange(100))
        plan = _make_plan(
            SplitStep(strategy="temporal", cut_time=70), PreprocessStep("moving_average", window=5)
        )
        clean = execute(plan, ds, CLEAN, 6)
        eval_idx = clean.split.eval_indices
        expected = moving_average_smooth(ds.take(eval_idx), 5).features
        assert np.allclose(clean.dataset.features[eval_idx], expected)
        assert clean.violations == []
        assert _violating_names(execute(plan, ds, LEAKY, 6).violations) == {"moving_average"}


# ---------------------------------------------------------------------------
# Label features, resampling
# ---------------------------------------------------------------------------


class TestLabelFeature:
    def test_leaky_label_feature_flagged(self) -> None:
        plan = _make_plan(LabelFeatureStep(delta=10.0), SplitStep())
        leaky = execute(plan, _make_blobs(), LEAKY, 7)
        clean = execute(plan, _make_blobs(), CLEAN, 7)
        assert leaky.dataset.n_features == clean.dataset.n_features == 5
        assert _violating_names(leaky.violations) == {"label_feature"}
        assert clean.violations == []


class TestResampling:
    def test_clean_smote_balances_training_rows(self) -> None:
        plan = _make_plan(SplitStep(), SynthesizeStep("smote", k=3))
        result = execute(plan, _make_blobs(minority_fraction=0.2), CLEAN, 8)
        train_labels = result.dataset.labels[result.split.train_indices]
        assert int(train_labels.sum()) * 2 == train_labels.size
        assert result.violations == []
        assert result.reports[0].generated.n_rows > 0

    def test_leaky_smote_draws_on_eval(self) -> None:
        plan = _make_plan(SplitStep(), SynthesizeStep("smote", k=3))
        result = execute(plan, _make_blobs(minority_fraction=0.2), LEAKY, 8)
        assert "smote" in _violating_names(result.violations)

    def test_synthetic_rows_never_evaluated(self) -> None:
        plan = _make_plan(SplitStep(), SynthesizeStep("smote", k=3))
        result = execute(plan, _make_blobs(minority_fraction=0.2), CLEAN, 9)
        generated = set(result.reports[0].generated.provenance.tolist())
        evaluated = set(result.dataset.provenance[result.split.eval_indices].tolist())
        assert not generated & evaluated

    def test_centroid_replaces_training_majority(self) -> None:
        plan = _make_plan(SplitStep(), SynthesizeStep("centroid", n_clusters=6))
        result = execute(plan, _make_blobs(minority_fraction=0.3), CLEAN, 10)
        train_labels = result.dataset.labels[result.split.train_indices]
        assert int(np.sum(train_labels == 0)) <= 6
        assert result.violations == []


# ---------------------------------------------------------------------------
# Split knobs
# ---------------------------------------------------------------------------


class TestSplitKnobs:
    def test_contamination_flags_training(self) -> None:
        plan = _make_plan(SplitStep(contamination=0.5))
        leaky = execute(plan, _make_blobs(), LEAKY, 11)
        assert _violating_names(leaky.violations) == {"train"}
        assert len(leaky.violations[0].offending) == 12
        assert execute(plan, _make_blobs(), CLEAN, 11).violations == []

    def test_with_replacement_leaky_strategy(self) -> None:
        plan = _make_plan(SplitStep(leaky_strategy="with_replacement", eval_fraction=0.5))
        leaky = execute(plan, _make_blobs(), LEAKY, 12)
        assert leaky.split.leaky
        assert leaky.violations
        assert not execute(plan, _make_blobs(), CLEAN, 12).split.leaky

    def test_group_split_and_pooled_leak(self) -> None:
        base = _make_blobs()
        ds = Dataset.from_arrays(base.features, base.labels, group_id=np.arange(120) % 3)
        plan = _make_plan(
            SplitStep(strategy="group", held_out=2, leaky_strategy="holdout", eval_fraction=0.3)
        )
        clean = execute(plan, ds, CLEAN, 13)
        assert clean.violations == []
        leaky = execute(plan, ds, LEAKY, 13)
        assert [v.role for v in leaky.violations] == ["groups"]

    def test_fixed_pair_drop_eval_removes_copies(self) -> None:
        base = _make_blobs(n=60)
        ds = Dataset.concat([base, base.take([0, 1, 2])])
        pair = SplitPair(np.arange(40), np.arange(40, 63))
        plan = _make_plan(SplitStep(strategy="fixed", pair=pair, on_shared="drop_eval"))
        clean = execute(plan, ds, CLEAN, 14)
        assert clean.split.eval_indices.size == 20
        assert clean.violations == []
        leaky = execute(plan, ds, LEAKY, 14)
        assert leaky.violations[0].offending == [0, 1, 2]

    def test_drop_train_can_empty_training(self) -> None:
        ds = _make_blobs(n=20)
        pair = SplitPair(np.arange(10), np.arange(20))
        plan = _make_plan(SplitStep(strategy="fixed", pair=pair, on_shared="drop_train"))
        with pytest.raises(InsufficientDataError):
            execute(plan, ds, CLEAN, 0)


# ---------------------------------------------------------------------------
# Validation handling
# ---------------------------------------------------------------------------


class TestValidation:
    def test_split_before_fit_is_clean(self) -> None:
        plan = _make_plan(SplitStep(), PreprocessStep("standardize"), uses_validation=True)
        result = execute(plan, _make_blobs(), CLEAN, 15)
        assert result.violations == []
        assert result.validation_indices.size == 19  # round(0.2 * 96)
        assert not np.intersect1d(result.validation_indices, result.split.train_indices).size

    def test_split_after_fit_flags_the_fit(self) -> None:
        policy = ScopePolicy(mode="clean", validation_handling="split_after_fit")
        plan = _make_plan(SplitStep(), PreprocessStep("standardize"), uses_validation=True)
        result = execute(plan, _make_blobs(), policy, 15)
        assert _violating_names(result.violations) == {"standardize"}


# ---------------------------------------------------------------------------
# Determinism and pairing
# ---------------------------------------------------------------------------


class TestDeterminism:
    def test_same_seed_same_result(self) -> None:
        plan = _standardize_plan()
        a = execute(plan, _make_blobs(), LEAKY, 21)
        b = execute(plan, _make_blobs(), LEAKY, 21)
        assert a.accuracy == b.accuracy
        assert a.model.same_parameters(b.model)
        assert a.audit.to_jsonl() == b.audit.to_jsonl()

    def test_no_fit_steps_means_identical_conditions(self) -> None:
        plan = _make_plan(SplitStep())
        leaky = execute(plan, _make_blobs(), LEAKY, 22)
        clean = execute(plan, _make_blobs(), CLEAN, 22)
        assert leaky.accuracy == clean.accuracy
        assert leaky.model.same_parameters(clean.model)

    def test_run_label_on_every_record(self) -> None:
        result = execute(_make_plan(SplitStep()), _make_blobs(), CLEAN, 0, run="demo")
        assert {r.run for r in result.audit.records} == {"demo"}


# ---------------------------------------------------------------------------
# audit_check
# ---------------------------------------------------------------------------


def _record(step: int, name: str, role: str, **fields: object) -> AuditRecord:
    return AuditRecord.model_validate(
        {"step": step, "name": name, "kind": name, "role": role, **fields}
    )


class TestAuditCheck:
    def _log(self) -> AuditLog:
        log = AuditLog(run="r")
        log.add(_record(0, "split", "split", eval_provenance=[5, 6]))
        log.add(_record(1, "scale", "fit", saw_provenance=[1, 2]))
        log.add(_record(2, "train", "train", saw_provenance=[1, 6]))
        return log

    def test_recomputes_from_split_record(self) -> None:
        (violation,) = audit_check(self._log())
        assert (violation.name, violation.offending) == ("train", [6])

    def test_eval_override(self) -> None:
        names = [v.name for v in audit_check(self._log(), eval_provenance=[2])]
        assert names == ["scale"]

    def test_groups_record(self) -> None:
        log = AuditLog(run="g")
        log.add(_record(0, "split", "groups", saw_groups=[0, 1], eval_groups=[1]))
        (violation,) = audit_check(log)
        assert violation.offending == [1]

    def test_jsonl_groups_runs(self) -> None:
        a = self._log()
        b = self._log().relabel("other")
        logs = AuditLog.from_jsonl(a.to_jsonl() + b.to_jsonl())
        assert [log.run for log in logs] == ["r", "other"]
        assert [len(log.records) for log in logs] == [3, 3]

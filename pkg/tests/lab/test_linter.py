"""Tests for manifest parsing and the leakage rules."""

from __future__ import annotations

import json
from typing import Any

import pytest

from lab.linter import lint, lint_text, parse_manifest, violations
from lab.models.manifest import ManifestStep, TaskContext
from shared.errors import ManifestError
from shared.models.finding import Finding

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _step(step_id: str, kind: str, *inputs: str, **attributes: Any) -> dict[str, Any]:
    step: dict[str, Any] = {"id": step_id, "kind": kind, "fit_inputs": list(inputs)}
    if attributes:
        step["attributes"] = attributes
    return step


SPLIT = _step("split", "split", strategy="holdout")
TRAIN = _step("fit", "train", "train")
SCORE = _step("score", "evaluate", "eval")


def _lint(*steps: dict[str, Any], **context: Any) -> list[Finding]:
    document = {"context": context or {"paradigm": "inductive"}, "steps": list(steps)}
    return lint_text(json.dumps(document))


def _rules(findings: list[Finding]) -> list[tuple[str, str, str]]:
    return [(f.rule_id, f.taxonomy_category, f.severity) for f in findings]


def _defects(text: str) -> list[str]:
    with pytest.raises(ManifestError) as excinfo:
        parse_manifest(text)
    return excinfo.value.defects


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class TestParseManifest:
    def test_valid_manifest(self) -> None:
        text = json.dumps({"steps": [SPLIT, TRAIN, SCORE]})
        steps, ctx = parse_manifest(text)
        assert [s.id for s in steps] == ["split", "fit", "score"]
        assert ctx.paradigm == "inductive"
        assert ctx.axes == ["none"]

    def test_malformed_json_reports_position(self) -> None:
        (defect,) = _defects('{"steps": [\n  {"id": "a",, }\n]}')
        assert defect.startswith("line 2, column")

    def test_unknown_kind_names_field_path(self) -> None:
        defects = _defects(json.dumps({"steps": [SPLIT, _step("x", "shuffle"), TRAIN, SCORE]}))
        assert any(d.startswith("steps[1].kind") and "'shuffle'" in d for d in defects)

    def test_unknown_region(self) -> None:
        defects = _defects(json.dumps({"steps": [SPLIT, _step("fit", "train", "everything")]}))
        assert any(d.startswith("steps[1].fit_inputs[0]") for d in defects)

    def test_every_defect_listed(self) -> None:
        steps = [_step("a", "split"), _step("a", "split"), TRAIN]
        defects = _defects(json.dumps({"steps": steps}))
        assert any("duplicate step id 'a'" in d for d in defects)
        assert any("exactly one split step, found 2" in d for d in defects)

    def test_missing_split(self) -> None:
        (defect,) = _defects(json.dumps({"steps": [TRAIN, SCORE]}))
        assert "found 0" in defect

    def test_top_level_must_be_object(self) -> None:
        assert _defects("[]") == ["manifest: top level must be a JSON object"]

    def test_unknown_field_rejected(self) -> None:
        defects = _defects(json.dumps({"steps": [SPLIT], "owner": "me"}))
        assert any(d.startswith("owner") for d in defects)

    def test_transductive_axes(self) -> None:
        text = json.dumps(
            {"context": {"paradigm": "transductive", "axes": ["cross_time"]}, "steps": [SPLIT]}
        )
        (defect,) = _defects(text)
        assert defect.startswith("context")

    def test_lint_rechecks_structure(self) -> None:
        steps = [ManifestStep(id="a", kind="train"), ManifestStep(id="b", kind="evaluate")]
        with pytest.raises(ManifestError):
            lint(steps, TaskContext())


class TestTaskContext:
    def test_domain_adaptation_default_role(self) -> None:
        ctx = TaskContext(paradigm="domain_adaptation")
        assert ctx.target_role == "generalize_to_target_domain"

    def test_role_outside_domain_adaptation(self) -> None:
        with pytest.raises(ValueError, match="target_role"):
            TaskContext(paradigm="inductive", target_role="predict_known_target_only")

    def test_none_is_exclusive(self) -> None:
        with pytest.raises(ValueError):
            TaskContext(axes=["none", "cross_time"])

    def test_axes_sorted_and_deduplicated(self) -> None:
        ctx = TaskContext(axes=["cross_time", "cross_source", "cross_time"])
        assert ctx.axes == ["cross_source", "cross_time"]


# ---------------------------------------------------------------------------
# Fit scope (R1, R2)
# ---------------------------------------------------------------------------


class TestFitScope:
    def test_safe_pipeline_is_silent(self) -> None:
        scale = _step("scale", "preprocess", "train", method="standardize")
        assert _lint(SPLIT, scale, TRAIN, SCORE) == []

    def test_fit_before_split(self) -> None:
        scale = _step("scale", "preprocess", "train", method="standardize")
        (finding,) = _lint(scale, SPLIT, TRAIN, SCORE)
        assert _rules([finding]) == [("R1", "normalization", "violation")]
        assert (finding.step_id, finding.step_index) == ("scale", 0)
        assert "before the split" in finding.message

    def test_fit_on_eval_after_split(self) -> None:
        scale = _step("scale", "preprocess", "train", "eval", method="minmax")
        (finding,) = _lint(SPLIT, scale, TRAIN, SCORE)
        assert finding.rule_id == "R1"
        assert "on eval" in finding.message

    @pytest.mark.parametrize(
        ("method", "category"),
        [
            ("knn_impute", "imputation"),
            ("moving_average", "cleaning"),
            ("ttest_select", "feature_engineering"),
            ("standardize", "normalization"),
        ],
    )
    def test_category_from_method(self, method: str, category: str) -> None:
        step = _step("prep", "preprocess", "all", method=method)
        (finding,) = _lint(SPLIT, step, TRAIN, SCORE)
        assert finding.taxonomy_category == category

    def test_declared_category_wins(self) -> None:
        step = _step("prep", "feature_engineer", "all", method="pca", category="cleaning")
        (finding,) = _lint(SPLIT, step, TRAIN, SCORE)
        assert finding.taxonomy_category == "cleaning"

    def test_synthesis_before_split(self) -> None:
        smote = _step("oversample", "synthesize", "train", method="smote")
        assert _rules(_lint(smote, SPLIT, TRAIN, SCORE)) == [("R2", "synthesis", "violation")]


# ---------------------------------------------------------------------------
# Validation carving and set intersection (R3, R4)
# ---------------------------------------------------------------------------


class TestValidationCarve:
    def test_fit_before_carve(self) -> None:
        scale = _step("scale", "preprocess", "train", method="standardize")
        carve = _step("carve", "derive_validation", "train")
        (finding,) = _lint(SPLIT, scale, carve, TRAIN, SCORE)
        assert _rules([finding]) == [("R3", "normalization", "violation")]
        assert finding.step_id == "carve"
        assert "'scale'" in finding.message

    def test_carve_before_fit_is_safe(self) -> None:
        carve = _step("carve", "derive_validation", "train")
        scale = _step("scale", "preprocess", "train", method="standardize")
        assert _lint(SPLIT, carve, scale, TRAIN, SCORE) == []

    def test_later_fit_on_validation(self) -> None:
        carve = _step("carve", "derive_validation", "train")
        smote = _step("oversample", "synthesize", "train", "validation", method="smote")
        assert _rules(_lint(SPLIT, carve, smote, TRAIN, SCORE)) == [
            ("R3", "synthesis", "violation")
        ]

    def test_declared_after_fit(self) -> None:
        carve = _step("carve", "derive_validation", "train", after_fit=True)
        assert [f.rule_id for f in _lint(SPLIT, carve, TRAIN, SCORE)] == ["R3"]

    def test_validation_from_eval(self) -> None:
        carve = _step("carve", "derive_validation", "eval")
        assert _rules(_lint(SPLIT, carve, TRAIN, SCORE)) == [
            ("R4", "sets_intersection", "violation")
        ]


class TestSetsIntersection:
    @pytest.mark.parametrize("flag", ["with_replacement", "shared_instances"])
    def test_split_flags(self, flag: str) -> None:
        split = _step("split", "split", **{flag: True})
        assert [f.rule_id for f in _lint(split, TRAIN, SCORE)] == ["R4"]

    def test_training_on_eval(self) -> None:
        (finding,) = _lint(SPLIT, _step("fit", "train", "train", "eval"), SCORE)
        assert finding.rule_id == "R4"
        assert finding.step_id == "fit"

    def test_early_stopping_on_eval(self) -> None:
        fit = _step("fit", "train", "train", validation_region="eval")
        (finding,) = _lint(SPLIT, fit, SCORE)
        assert "monitors eval" in finding.message

    def test_fine_tune_on_eval(self) -> None:
        tune = _step("tune", "fine_tune", "eval")
        assert [f.rule_id for f in _lint(SPLIT, TRAIN, tune, SCORE)] == ["R4"]


# ---------------------------------------------------------------------------
# Distribution (R5, R6, R7)
# ---------------------------------------------------------------------------


class TestDistributionRules:
    @pytest.mark.parametrize(
        ("declared", "expected"),
        [(None, ["caution"]), (False, ["violation"]), (True, [])],
    )
    def test_respects_time(self, declared: bool | None, expected: list[str]) -> None:
        attrs = {} if declared is None else {"respects_time": declared}
        split = _step("split", "split", **attrs)
        findings = _lint(split, TRAIN, SCORE, axes=["cross_time"])
        assert [f.severity for f in findings] == expected
        assert all(f.rule_id == "R5" for f in findings)

    @pytest.mark.parametrize("axis", ["cross_source", "cross_group"])
    def test_respects_groups(self, axis: str) -> None:
        split = _step("split", "split", respects_groups=False)
        assert _rules(_lint(split, TRAIN, SCORE, axes=[axis])) == [
            ("R6", "distribution", "violation")
        ]

    def test_no_claim_no_distribution_rules(self) -> None:
        split = _step("split", "split", respects_time=False, respects_groups=False)
        assert _lint(split, TRAIN, SCORE) == []

    def test_both_axes(self) -> None:
        split = _step("split", "split")
        findings = _lint(split, TRAIN, SCORE, axes=["cross_time", "cross_source"])
        assert [f.rule_id for f in findings] == ["R5", "R6"]


class TestDomainAdaptation:
    STEPS = (
        _step("split", "split"),
        _step("adapt", "train", "source", "target_train", "target_eval"),
        _step("score", "evaluate", "target_eval"),
    )

    def test_adapting_on_evaluated_target(self) -> None:
        findings = _lint(*self.STEPS, paradigm="domain_adaptation")
        assert _rules(findings) == [("R7", "distribution", "violation")]

    def test_known_target_only_is_info(self) -> None:
        findings = _lint(
            *self.STEPS, paradigm="domain_adaptation", target_role="predict_known_target_only"
        )
        assert [f.severity for f in findings] == ["info"]

    def test_unsupervised_fit_on_known_target(self) -> None:
        scale = _step("scale", "preprocess", "target_eval", method="standardize")
        adapt = _step("adapt", "train", "source", "target_train")
        context = {"paradigm": "domain_adaptation", "target_role": "predict_known_target_only"}
        findings = _lint(_step("split", "split"), scale, adapt, self.STEPS[2], **context)
        assert _rules(findings) == [("R1", "normalization", "info")]


class TestTransductive:
    def test_unsupervised_fit_is_info(self) -> None:
        scale = _step("scale", "preprocess", "all", method="standardize")
        findings = _lint(scale, SPLIT, TRAIN, SCORE, paradigm="transductive")
        assert [f.severity for f in findings] == ["info"]
        assert violations(findings) == []

    def test_supervised_fit_is_violation(self) -> None:
        select = _step("select", "feature_engineer", "all", method="ttest_select")
        findings = _lint(select, SPLIT, TRAIN, SCORE, paradigm="transductive")
        assert [f.severity for f in findings] == ["violation"]

    def test_declared_label_use(self) -> None:
        custom = _step("custom", "preprocess", "all", reads_labels=True)
        findings = _lint(custom, SPLIT, TRAIN, SCORE, paradigm="transductive")
        assert [f.severity for f in findings] == ["violation"]

    def test_synthesis_is_info(self) -> None:
        smote = _step("oversample", "synthesize", "all", method="smote")
        findings = _lint(smote, SPLIT, TRAIN, SCORE, paradigm="transductive")
        assert _rules(findings) == [("R2", "synthesis", "info")]


# ---------------------------------------------------------------------------
# Collection (R8, R9, R10) and ordering
# ---------------------------------------------------------------------------


class TestCollection:
    @pytest.mark.parametrize(
        ("provenance", "category"),
        [("label_copied", "direct_label"), ("label_derived", "indirect_label")],
    )
    def test_label_features(self, provenance: str, category: str) -> None:
        collect = _step("collect", "collect", feature_provenance=provenance)
        assert _rules(_lint(collect, SPLIT, TRAIN, SCORE)) == [("R8", category, "violation")]

    def test_overlapping_windows(self) -> None:
        split = _step("split", "split", overlapping_windows=True)
        assert _rules(_lint(split, TRAIN, SCORE)) == [("R9", "overlap", "violation")]

    @pytest.mark.parametrize(
        ("deduplicated", "expected"),
        [(None, ["caution"]), (False, ["violation"]), (True, [])],
    )
    def test_composed_dataset(self, deduplicated: bool | None, expected: list[str]) -> None:
        attrs: dict[str, Any] = {"composed_from_existing": True}
        if deduplicated is not None:
            attrs["deduplicated"] = deduplicated
        findings = _lint(_step("collect", "collect", **attrs), SPLIT, TRAIN, SCORE)
        assert [f.severity for f in findings] == expected


class TestOrdering:
    def test_sorted_by_step_then_rule(self) -> None:
        collect = _step("collect", "collect", feature_provenance="label_copied")
        split = _step("split", "split", overlapping_windows=True, with_replacement=True)
        scale = _step("scale", "preprocess", "eval", method="standardize")
        findings = _lint(collect, split, scale, TRAIN, SCORE)
        assert [(f.step_index, f.rule_id) for f in findings] == [
            (0, "R8"),
            (1, "R4"),
            (1, "R9"),
            (2, "R1"),
        ]

    def test_deterministic(self) -> None:
        steps = (_step("scale", "preprocess", "all"), SPLIT, TRAIN, SCORE)
        assert _lint(*steps) == _lint(*steps)

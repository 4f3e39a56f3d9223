"""Static leakage linter for declarative pipeline manifests.

Rules read only the manifest: the order of steps, the data regions each step
learns from and the attributes it declares. Findings are deterministic and
ordered by step position, then rule number.

Rules:
    R1  preprocess / feature_engineer fitted on held-out data
    R2  synthesize fitted on held-out data
    R3  validation carved after fitting on the whole training set
    R4  the same instances on both sides (with_replacement, shared instances,
        validation = eval, training on eval)
    R5  split ignores time while the task generalizes across time
    R6  split ignores sources/groups while the task generalizes across them
    R7  domain adaptation evaluated on target data also used to train
    R8  features copied or derived from the label
    R9  instances built from overlapping segments on both sides of the split
    R10 dataset composed from existing datasets without deduplication
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence

from pydantic import ValidationError

from lab.models.manifest import (
    FIT_KINDS,
    LEARNING_KINDS,
    Manifest,
    ManifestStep,
    TaskContext,
)
from shared.errors import ManifestError
from shared.models.finding import TAXONOMY_CATEGORIES, Finding, Severity, TaxonomyCategory

logger = logging.getLogger(__name__)

HELD_OUT_REGIONS = frozenset({"eval", "all", "target_eval"})

METHOD_CATEGORIES: dict[str, TaxonomyCategory] = {
    "standardize": "normalization",
    "minmax": "normalization",
    "normalize": "normalization",
    "scale": "normalization",
    "knn_impute": "imputation",
    "impute": "imputation",
    "mean_impute": "imputation",
    "moving_average": "cleaning",
    "smooth": "cleaning",
    "outlier_removal": "cleaning",
    "denoise": "cleaning",
    "ttest_select": "feature_engineering",
    "select": "feature_engineering",
    "pca": "feature_engineering",
    "spca": "feature_engineering",
    "encode": "feature_engineering",
}

# methods that read labels when fitted
SUPERVISED_METHODS = frozenset({"ttest_select", "select", "spca", "encode"})


# =============================================================================
# Parsing and structural validation
# =============================================================================


def _location(loc: tuple[int | str, ...]) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "manifest"


def structural_defects(steps: Sequence[ManifestStep]) -> list[str]:
    """Every structural problem of ``steps`` beyond per-field validation."""
    defects: list[str] = []
    seen: dict[str, int] = {}
    for i, step in enumerate(steps):
        if step.id in seen:
            first = seen[step.id]
            defects.append(f"steps[{i}].id: duplicate step id '{step.id}' (see steps[{first}])")
        else:
            seen[step.id] = i
    splits = [i for i, s in enumerate(steps) if s.kind == "split"]
    if len(splits) != 1:
        defects.append(f"steps: manifest needs exactly one split step, found {len(splits)}")
    return defects


def parse_manifest(text: str) -> tuple[list[ManifestStep], TaskContext]:
    """Parse and structurally validate a JSON manifest.

    Raises:
        ManifestError: Listing every defect with its location (line and column
            for malformed JSON, a field path such as ``steps[2].kind`` otherwise).
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestError([f"line {e.lineno}, column {e.colno}: {e.msg}"]) from e
    if not isinstance(document, dict):
        raise ManifestError(["manifest: top level must be a JSON object"])

    try:
        manifest = Manifest.model_validate(document)
    except ValidationError as e:
        defects = []
        for error in e.errors():
            where = _location(tuple(error["loc"]))
            token = error.get("input")
            shown = f" (got {token!r})" if isinstance(token, str | int | float | bool) else ""
            defects.append(f"{where}: {error['msg']}{shown}")
        raise ManifestError(defects) from e

    defects = structural_defects(manifest.steps)
    if defects:
        raise ManifestError(defects)
    logger.debug(f"Parsed manifest with {len(manifest.steps)} steps ({manifest.context.paradigm})")
    return manifest.steps, manifest.context


# =============================================================================
# Rule helpers
# =============================================================================


def _category(step: ManifestStep) -> TaxonomyCategory:
    declared = step.attributes.get("category")
    if declared in TAXONOMY_CATEGORIES:
        return declared  # type: ignore[no-any-return]
    method = str(step.attributes.get("method", "")).lower()
    if method in METHOD_CATEGORIES:
        return METHOD_CATEGORIES[method]
    return "feature_engineering" if step.kind == "feature_engineer" else "normalization"


def _reads_labels(step: ManifestStep) -> bool:
    declared = step.flag("reads_labels")
    if declared is not None:
        return declared
    return str(step.attributes.get("method", "")).lower() in SUPERVISED_METHODS


def _effective_inputs(step: ManifestStep, before_split: bool) -> set[str]:
    """Regions a fit actually sees; anything fitted before the split sees all rows."""
    if before_split:
        return {"all"}
    return set(step.fit_inputs)


def _eval_regions(steps: Sequence[ManifestStep]) -> set[str]:
    regions: set[str] = set()
    for step in steps:
        if step.kind == "evaluate":
            regions.update(step.fit_inputs or ["eval"])
    return regions


class _Linter:
    def __init__(self, steps: Sequence[ManifestStep], ctx: TaskContext):
        self.steps = list(steps)
        self.ctx = ctx
        self.split_index = next(i for i, s in enumerate(self.steps) if s.kind == "split")
        self.findings: list[Finding] = []

    def emit(
        self,
        rule: str,
        category: TaxonomyCategory,
        severity: Severity,
        index: int,
        message: str,
    ) -> None:
        self.findings.append(
            Finding(
                rule_id=rule,
                taxonomy_category=category,
                severity=severity,
                step_id=self.steps[index].id,
                step_index=index,
                message=message,
            )
        )

    def _fit_severity(self, step: ManifestStep, touched: set[str]) -> Severity:
        """Severity of a held-out fit under the task's paradigm."""
        if self.ctx.paradigm == "transductive":
            return "violation" if _reads_labels(step) else "info"
        if (
            self.ctx.paradigm == "domain_adaptation"
            and self.ctx.target_role == "predict_known_target_only"
            and touched == {"target_eval"}
            and not _reads_labels(step)
        ):
            return "info"
        return "violation"

    # ------------------------------------------------------------------
    # Rules
    # ------------------------------------------------------------------

    def fit_scope(self, i: int, step: ManifestStep) -> None:
        """R1 and R2."""
        touched = _effective_inputs(step, i < self.split_index) & HELD_OUT_REGIONS
        if not touched:
            return
        if i < self.split_index:
            where = "before the split"
        else:
            where = f"on {', '.join(sorted(touched))}"
        if step.kind == "synthesize":
            severity: Severity = (
                "info" if self.ctx.paradigm == "transductive" else self._fit_severity(step, touched)
            )
            method = step.attributes.get("method", "resampler")
            self.emit("R2", "synthesis", severity, i, f"{method} draws on held-out rows {where}")
        else:
            method = step.attributes.get("method", step.kind)
            severity = self._fit_severity(step, touched)
            self.emit("R1", _category(step), severity, i, f"{method} is fitted {where}")

    def validation_carve(self, i: int, step: ManifestStep) -> None:
        """R3 and the early-stopping half of R4."""
        if set(step.fit_inputs) & HELD_OUT_REGIONS:
            message = "validation set is drawn from eval data"
            self.emit("R4", "sets_intersection", "violation", i, message)
        earlier = [
            s
            for s in self.steps[self.split_index + 1 : i]
            if s.kind in FIT_KINDS and set(s.fit_inputs) & {"train", "validation"}
        ]
        later = [
            s for s in self.steps[i + 1 :] if s.kind in FIT_KINDS and "validation" in s.fit_inputs
        ]
        offending = earlier + later
        if offending:
            first = offending[0]
            category = "synthesis" if first.kind == "synthesize" else _category(first)
            message = f"'{first.id}' is fitted on data that includes the validation set"
            self.emit("R3", category, "violation", i, message)
        elif step.flag("after_fit"):
            message = "validation set is carved after fitting on the whole training set"
            self.emit("R3", "normalization", "violation", i, message)

    def split_rules(self, i: int, step: ManifestStep) -> None:
        """R4, R5, R6 and R9 for the split step."""
        if step.flag("with_replacement") or step.flag("shared_instances"):
            message = "split can assign the same instance to both sides"
            self.emit("R4", "sets_intersection", "violation", i, message)

        axes = self.ctx.generalization_axis
        if "cross_time" in axes:
            respects_time = step.flag("respects_time")
            if respects_time is None:
                message = "split does not declare respects_time for a cross-time task"
                self.emit("R5", "distribution", "caution", i, message)
            elif not respects_time:
                message = "split mixes rows acquired later into training"
                self.emit("R5", "distribution", "violation", i, message)
        if axes & {"cross_source", "cross_group"}:
            respects_groups = step.flag("respects_groups")
            if respects_groups is None:
                message = "split does not declare respects_groups for a cross-source task"
                self.emit("R6", "distribution", "caution", i, message)
            elif not respects_groups:
                message = "split pools sources or groups across train and eval"
                self.emit("R6", "distribution", "violation", i, message)

        if step.flag("overlapping_windows"):
            message = "instances share overlapping segments across the split"
            self.emit("R9", "overlap", "violation", i, message)

    def learning_rules(self, i: int, step: ManifestStep) -> None:
        """R4 (training on eval, validation = eval) and R7."""
        validation_region = step.attributes.get("validation_region")
        if validation_region in HELD_OUT_REGIONS:
            message = f"early stopping monitors {validation_region} data"
            self.emit("R4", "sets_intersection", "violation", i, message)

        touched = set(step.fit_inputs) & HELD_OUT_REGIONS
        if self.ctx.paradigm == "domain_adaptation":
            evaluated = _eval_regions(self.steps) & HELD_OUT_REGIONS
            if touched & (evaluated | {"all"}):
                known_only = self.ctx.target_role == "predict_known_target_only"
                message = "model is evaluated on target data it was adapted on"
                self.emit("R7", "distribution", "info" if known_only else "violation", i, message)
        elif touched:
            message = f"{step.kind} learns from {', '.join(sorted(touched))}"
            self.emit("R4", "sets_intersection", "violation", i, message)

    def collect_rules(self, i: int, step: ManifestStep) -> None:
        """R8 and R10."""
        provenance = step.attributes.get("feature_provenance")
        if provenance == "label_copied":
            self.emit("R8", "direct_label", "violation", i, "a feature is a copy of the label")
        elif provenance == "label_derived":
            self.emit("R8", "indirect_label", "violation", i, "a feature is derived from the label")

        if step.flag("composed_from_existing"):
            deduplicated = step.flag("deduplicated")
            if deduplicated is None:
                message = "composed dataset does not declare deduplication"
                self.emit("R10", "data_collecting", "caution", i, message)
            elif not deduplicated:
                message = "composed dataset may repeat instances across its sources"
                self.emit("R10", "data_collecting", "violation", i, message)

    def run(self) -> list[Finding]:
        for i, step in enumerate(self.steps):
            if step.kind == "collect":
                self.collect_rules(i, step)
            elif step.kind in FIT_KINDS:
                self.fit_scope(i, step)
            elif step.kind == "derive_validation":
                self.validation_carve(i, step)
            elif step.kind == "split":
                self.split_rules(i, step)
            elif step.kind in LEARNING_KINDS:
                self.learning_rules(i, step)
        return sorted(self.findings, key=Finding.sort_key)


def lint(steps: Sequence[ManifestStep], ctx: TaskContext) -> list[Finding]:
    """Check ``steps`` under ``ctx``.

    Raises:
        ManifestError: When the steps fail structural validation; no findings
            are produced in that case.
    """
    defects = structural_defects(steps)
    if defects:
        raise ManifestError(defects)
    findings = _Linter(steps, ctx).run()
    logger.debug(f"Lint produced {len(findings)} findings")
    return findings


def lint_text(text: str) -> list[Finding]:
    steps, ctx = parse_manifest(text)
    return lint(steps, ctx)


def violations(findings: Sequence[Finding]) -> list[Finding]:
    return [f for f in findings if f.severity == "violation"]

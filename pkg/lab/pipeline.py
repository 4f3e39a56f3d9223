"""Scoped pipeline execution.

``execute`` runs a :class:`PipelinePlan` under a :class:`ScopePolicy`. In clean
mode the split comes first, the validation set is carved out of the training
rows before anything is fitted, and every fit and resampler sees only the
training remainder. In leaky mode fits also see evaluation rows, and with
``split_after_fit`` the whole dataset is transformed before it is split.

Every fit, the training set, the validation set and the split itself leave an
audit record listing the provenance ids involved, so :func:`audit_check` can
prove afterwards whether held-out rows reached any learned component.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from lab.model import MlpModel, accuracy, init_mlp, train, train_early_stop
from lab.models.audit import AuditLog, AuditRecord, AuditViolation
from lab.models.params import PreprocParams
from lab.models.plan import (
    LabelFeatureStep,
    PipelinePlan,
    PreprocessStep,
    ScopePolicy,
    SplitStep,
    SynthesizeStep,
)
from lab.preprocess import apply_moving_average, apply_params, fit_params
from lab.resample import ResampleReport, centroid_undersample, smote
from lab.seeding import derive_seed, rng_for
from lab.split import (
    contamination_indices,
    group_split,
    holdout,
    kfold_stratified,
    sample_with_replacement_split,
    stratified_sample,
    temporal_split,
)
from lab.synth import inject_spurious_feature
from shared.errors import InsufficientDataError
from shared.models.dataset import ABSENT, Dataset, SplitPair
from shared.utils.duplicates import duplicate_mask

logger = logging.getLogger(__name__)

# spawn-key suffixes for the split step's secondary random streams
_CONTAMINATION_KEY = 1
_VALIDATION_KEY = 2
_EXPOSURE_KEY = 3

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ExecutionResult:
    """Outcome of one pipeline execution.

    ``split`` indexes ``dataset``, the final working dataset (label features
    appended, synthetic rows added at the end).
    """

    accuracy: float
    audit: AuditLog
    split: SplitPair
    dataset: Dataset
    model: MlpModel
    params: tuple[tuple[str, PreprocParams], ...]
    reports: tuple[ResampleReport, ...]
    validation_indices: np.ndarray = field(default_factory=lambda: _EMPTY)

    @property
    def violations(self) -> list[AuditViolation]:
        return audit_check(self.audit)


@dataclass
class _RunState:
    work: Dataset
    train: np.ndarray = field(default_factory=lambda: _EMPTY)
    train_rem: np.ndarray = field(default_factory=lambda: _EMPTY)
    eval: np.ndarray = field(default_factory=lambda: _EMPTY)
    val: np.ndarray = field(default_factory=lambda: _EMPTY)
    excluded: np.ndarray = field(default_factory=lambda: _EMPTY)
    donors: dict[int, tuple[int, ...]] = field(default_factory=dict)
    params: list[tuple[str, PreprocParams]] = field(default_factory=list)
    reports: list[ResampleReport] = field(default_factory=list)

    def provenance(self, idx: np.ndarray) -> list[int]:
        """Provenance ids of ``idx``, widened by the donors of synthetic rows."""
        ids = {int(p) for p in self.work.provenance[idx]}
        for p in list(ids):
            ids.update(self.donors.get(p, ()))
        return sorted(ids)

    def active(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.work.n_rows), self.excluded)


def _resolve_strategy(step: SplitStep, policy: ScopePolicy) -> str:
    if policy.leaky and step.leaky_strategy is not None:
        return step.leaky_strategy
    return step.strategy


def _make_pair(sub: Dataset, step: SplitStep, strategy: str, seed: int) -> SplitPair:
    if strategy == "holdout":
        return holdout(sub, step.eval_fraction, step.stratified, seed)
    if strategy == "kfold":
        return list(kfold_stratified(sub, step.k, seed, step.stratified).pairs())[step.fold]
    if strategy == "with_replacement":
        return sample_with_replacement_split(sub, step.eval_fraction, seed)
    if strategy == "group":
        assert step.held_out is not None
        return group_split(sub, step.held_out, step.group_axis)
    assert step.cut_time is not None
    return temporal_split(sub, step.cut_time)


def _split_rows(
    st: _RunState, step: SplitStep, policy: ScopePolicy, seed: int, synthetic: np.ndarray
) -> str:
    strategy = _resolve_strategy(step, policy)
    active = st.active()
    if strategy == "fixed":
        assert step.pair is not None
        st.train = np.setdiff1d(np.union1d(step.pair.train_indices, synthetic), st.excluded)
        st.eval = np.setdiff1d(step.pair.eval_indices, st.excluded)
    else:
        pair = _make_pair(st.work.take(active), step, strategy, seed)
        st.train, st.eval = active[pair.train_indices], active[pair.eval_indices]
    logger.debug(f"Split ({strategy}): {st.train.size} train rows, {st.eval.size} eval rows")
    return strategy


def _apply_leaky_knobs(st: _RunState, step: SplitStep, seed: int, split_index: int) -> None:
    if step.contamination > 0 and st.eval.size:
        rng = rng_for(seed, split_index, _CONTAMINATION_KEY)
        picked = st.eval[contamination_indices(st.eval.size, step.contamination, rng)]
        st.train = np.union1d(st.train, picked)


def _apply_hygiene(st: _RunState, step: SplitStep) -> None:
    if step.on_shared == "drop_eval":
        mask = duplicate_mask(st.work.take(st.train), st.work.take(st.eval))
        st.eval = st.eval[~mask]
        if st.eval.size == 0:
            raise InsufficientDataError(
                "no eval rows left after dropping duplicates of training rows"
            )
        if mask.any():
            logger.debug(f"Dropped {int(mask.sum())} eval rows duplicating training rows")
    elif step.on_shared == "drop_train":
        prov = st.work.provenance
        keep = ~np.isin(prov[st.train], prov[st.eval])
        st.train = st.train[keep]
        if st.train.size == 0:
            raise InsufficientDataError(
                "no training rows left after dropping rows shared with eval"
            )


def _carve_validation(
    st: _RunState, uses_validation: bool, policy: ScopePolicy, seed: int, split_index: int
) -> None:
    if not uses_validation:
        st.val, st.train_rem = _EMPTY, st.train
        return
    size = int(math.floor(policy.validation_fraction * st.train.size + 0.5))
    if size < 1 or size >= st.train.size:
        raise InsufficientDataError(
            f"cannot carve a validation set of {size} rows from {st.train.size} training rows"
        )
    rng = rng_for(seed, split_index, _VALIDATION_KEY)
    st.val = stratified_sample(st.work.labels, st.train, size, rng)
    st.train_rem = np.setdiff1d(st.train, st.val)


def _class_to_target(labels: np.ndarray, minority: bool) -> int:
    zeros = int(np.sum(labels == 0))
    ones = int(labels.size - zeros)
    if minority:
        return 1 if ones <= zeros else 0
    return 0 if zeros >= ones else 1


def _run_synthesize(
    st: _RunState, step: SynthesizeStep, fit_rows: np.ndarray, pool: np.ndarray, seed: int
) -> np.ndarray:
    """Run a resampler; returns the indices of the generated rows in ``st.work``."""
    pool_labels = st.work.labels[pool]
    if step.method == "smote":
        target = (
            step.target_class
            if step.target_class is not None
            else _class_to_target(pool_labels, minority=True)
        )
        if step.n_new is not None:
            n_new = step.n_new
        else:
            n_new = max(0, int(np.sum(pool_labels != target)) - int(np.sum(pool_labels == target)))
        report = smote(st.work, target, step.k, n_new, fit_rows, seed)
    else:
        target = (
            step.target_class
            if step.target_class is not None
            else _class_to_target(pool_labels, minority=False)
        )
        report = centroid_undersample(st.work, target, step.n_clusters, fit_rows, seed)

    start = st.work.n_rows
    st.work = Dataset.concat([st.work, report.generated])
    for prov, donors in zip(report.generated.provenance, report.donors, strict=True):
        st.donors[int(prov)] = donors
    st.reports.append(report)
    return np.arange(start, st.work.n_rows)


def _run_preprocess(
    st: _RunState, step: PreprocessStep, fit_rows: np.ndarray, segments: list[np.ndarray]
) -> None:
    params = fit_params(
        step.transform, st.work.take(fit_rows), k=step.k, window=step.window, top_k=step.top_k
    )
    st.params.append((step.label, params))
    if step.transform != "moving_average":
        st.work = apply_params(params, st.work)
        return
    # each segment is smoothed over its own time sequence only
    features = st.work.features.copy()
    for segment in [fit_rows, *segments]:
        if segment.size:
            features[segment] = apply_moving_average(params, st.work.take(segment)).features
    st.work = st.work.with_features(features)


def _fit_record(st: _RunState, index: int, name: str, kind: str, rows: np.ndarray) -> AuditRecord:
    return AuditRecord(
        step=index, name=name, kind=kind, role="fit", saw_provenance=st.provenance(rows)
    )


def _group_ids(ds: Dataset, idx: np.ndarray, axis: str) -> list[int]:
    column = ds.meta.column("group_id" if axis == "group" else "source_id")[idx]
    return sorted(int(g) for g in np.unique(column) if g != ABSENT)


def execute(
    plan: PipelinePlan, ds: Dataset, policy: ScopePolicy, seed: int, run: str = "run"
) -> ExecutionResult:
    """Run ``plan`` on ``ds`` under ``policy``.

    Every random choice derives from ``seed`` and the step position, so a
    clean and a leaky execution of the same plan share their randomness.

    Raises:
        PlanError: If the plan does not fit the dataset.
    """
    plan.validate_for(ds)
    st = _RunState(work=ds)
    audit = AuditLog(run=run)
    split_index = plan.steps.index(plan.split)
    split_step = plan.split
    train_step = plan.train
    split_seed = derive_seed(seed, split_index)

    for i, step in enumerate(plan.steps):
        if isinstance(step, LabelFeatureStep):
            st.work = inject_spurious_feature(
                st.work, step.delta, leaky=policy.leaky, seed=derive_seed(seed, i)
            )
            # the leaky column is computed from every row's label
            saw = np.arange(st.work.n_rows) if policy.leaky else _EMPTY
            audit.add(_fit_record(st, i, step.name, step.kind, saw))

    fit_steps = plan.fit_steps()
    if policy.leaky and policy.validation_handling == "split_after_fit":
        synthetic = _EMPTY
        for i, step in fit_steps:
            if isinstance(step, PreprocessStep) and step.pinned:
                continue
            rows = st.active()
            if isinstance(step, PreprocessStep):
                _run_preprocess(st, step, rows, [st.excluded])
            else:
                new = _run_synthesize(st, step, rows, rows, derive_seed(seed, i))
                st.excluded = np.union1d(st.excluded, st.reports[-1].removed)
                synthetic = np.union1d(synthetic, new)
            audit.add(_fit_record(st, i, step.label, step.kind, rows))
        strategy = _split_rows(st, split_step, policy, split_seed, synthetic)
        _apply_leaky_knobs(st, split_step, seed, split_index)
        _carve_validation(st, train_step.uses_validation, policy, seed, split_index)
        pending = [(i, s) for i, s in fit_steps if isinstance(s, PreprocessStep) and s.pinned]
        exposed = _EMPTY
    else:
        strategy = _split_rows(st, split_step, policy, split_seed, _EMPTY)
        if policy.leaky:
            _apply_leaky_knobs(st, split_step, seed, split_index)
        else:
            _apply_hygiene(st, split_step)
        _carve_validation(st, train_step.uses_validation, policy, seed, split_index)
        pending = fit_steps
        exposed = _EMPTY
        if policy.leaky and st.eval.size:
            n_exposed = int(math.ceil(policy.eval_exposure * st.eval.size - 1e-9))
            rng = rng_for(seed, split_index, _EXPOSURE_KEY)
            exposed = np.sort(rng.permutation(st.eval)[:n_exposed])

    for i, step in pending:
        pinned = isinstance(step, PreprocessStep) and step.pinned
        if pinned or (not policy.leaky and policy.validation_handling == "split_before_fit"):
            rows = st.train_rem
        elif not policy.leaky:
            rows = st.train
        else:
            rows = np.union1d(st.train, exposed)
        if isinstance(step, PreprocessStep):
            rest = np.setdiff1d(np.arange(st.work.n_rows), rows)
            segments = [np.intersect1d(rest, part) for part in (st.val, st.eval)]
            segments.append(np.setdiff1d(rest, np.union1d(st.val, st.eval)))
            _run_preprocess(st, step, rows, segments)
        else:
            new = _run_synthesize(st, step, rows, st.train_rem, derive_seed(seed, i))
            removed = st.reports[-1].removed
            st.train = np.union1d(np.setdiff1d(st.train, removed), new)
            st.train_rem = np.union1d(np.setdiff1d(st.train_rem, removed), new)
        audit.add(_fit_record(st, i, step.label, step.kind, rows))

    train_index = plan.steps.index(train_step)
    cfg = train_step.config
    model = init_mlp(st.work.n_features, derive_seed(seed, train_index, cfg.seed), cfg.hidden)
    train_ds = st.work.take(st.train_rem)
    if train_step.uses_validation:
        model = train_early_stop(model, train_ds, st.work.take(st.val), cfg)
    else:
        model = train(model, train_ds, cfg)
    audit.add(
        AuditRecord(
            step=train_index,
            name=train_step.name,
            kind=train_step.kind,
            role="train",
            saw_provenance=st.provenance(st.train_rem),
        )
    )
    if train_step.uses_validation:
        audit.add(
            AuditRecord(
                step=train_index,
                name="derive_validation",
                kind=train_step.kind,
                role="validation",
                saw_provenance=st.provenance(st.val),
            )
        )

    audit.add(
        AuditRecord(
            step=split_index,
            name=split_step.name,
            kind=split_step.kind,
            role="split",
            eval_provenance=st.provenance(st.eval),
            validation_provenance=st.provenance(st.val),
        )
    )
    if split_step.strategy == "group":
        audit.add(
            AuditRecord(
                step=split_index,
                name=split_step.name,
                kind=split_step.kind,
                role="groups",
                saw_groups=_group_ids(st.work, st.train_rem, split_step.group_axis),
                eval_groups=_group_ids(st.work, st.eval, split_step.group_axis),
            )
        )

    score = accuracy(model, st.work.take(st.eval))
    audit = _mark_violations(audit.relabel(run))
    effective = SplitPair(
        st.train_rem,
        st.eval,
        strategy=strategy,
        leaky=strategy == "with_replacement" or bool(np.intersect1d(st.train_rem, st.eval).size),
    )
    logger.debug(f"Run {run} ({policy.mode}): accuracy={score:.4f}")
    return ExecutionResult(
        accuracy=score,
        audit=audit,
        split=effective,
        dataset=st.work,
        model=model,
        params=tuple(st.params),
        reports=tuple(st.reports),
        validation_indices=st.val,
    )


def _mark_violations(audit: AuditLog) -> AuditLog:
    flagged = {(v.step, v.name, v.role) for v in audit_check(audit)}
    return AuditLog(
        run=audit.run,
        records=[
            r.model_copy(update={"violation": (r.step, r.name, r.role) in flagged})
            for r in audit.records
        ],
    )


def audit_check(audit: AuditLog, eval_provenance: list[int] | None = None) -> list[AuditViolation]:
    """Recompute every leak in ``audit``.

    A fit or the training set violates when it saw eval or validation
    provenance; a validation set violates when it shares provenance with eval;
    a group record violates when train and eval share a group id. The eval
    provenance comes from the run's split record unless ``eval_provenance`` is
    given.
    """
    split = audit.split_record()
    if eval_provenance is not None:
        eval_ids = set(eval_provenance)
    elif split is not None:
        eval_ids = set(split.eval_provenance or [])
    else:
        eval_ids = set()
    val_ids = set(split.validation_provenance or []) if split is not None else set()
    held_out = eval_ids | val_ids

    violations: list[AuditViolation] = []
    for record in audit.records:
        if record.role in ("fit", "train"):
            offending = held_out.intersection(record.saw_provenance)
        elif record.role == "validation":
            offending = eval_ids.intersection(record.saw_provenance)
        elif record.role == "groups":
            offending = set(record.saw_groups or []).intersection(record.eval_groups or [])
        else:
            continue
        if offending:
            violations.append(
                AuditViolation(
                    run=audit.run,
                    step=record.step,
                    name=record.name,
                    role=record.role,
                    offending=sorted(offending),
                )
            )
    return violations

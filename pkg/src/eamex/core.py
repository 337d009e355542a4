"""Core domain types shared by every metric family.

Importance vectors are always probability measures: non-negative entries
summing to one. The normalization helpers here are the single place that
convention is enforced; metric modules trust their inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-9


class ValidationError(ValueError):
    """Input violates a documented precondition or type invariant."""


class Task(enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"

    @classmethod
    def parse(cls, text: str) -> "Task":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValidationError(
                f"unknown task {text!r}, expected 'classification' or 'regression'"
            ) from None


def _as_float_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or infinite entries")
    return arr


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a 1-D vector, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or infinite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, aligned target, and the declared task.

    Features are stored column-major (Fortran order): every metric loop
    slices columns, never rows.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    target: np.ndarray
    task: Task

    def __init__(self, features, feature_names, target, task: Task):
        feats = np.array(_as_float_matrix(features, "features"), order="F")
        names = tuple(str(n) for n in feature_names)
        m, d = feats.shape
        if m < 2:
            raise ValidationError(f"need at least 2 samples, got {m}")
        if d < 1:
            raise ValidationError("need at least 1 feature")
        if len(names) != d:
            raise ValidationError(
                f"{len(names)} feature names for {d} feature columns"
            )
        if len(set(names)) != len(names):
            raise ValidationError("feature names must be unique")

        tgt = _as_float_vector(target, "target").copy()
        if tgt.shape[0] != m:
            raise ValidationError(
                f"target length {tgt.shape[0]} != number of samples {m}"
            )
        if task is Task.CLASSIFICATION:
            if not np.all(tgt == np.round(tgt)):
                raise ValidationError("classification targets must be integers")
            tgt = tgt.astype(np.int64)
            if tgt.min() < 0:
                raise ValidationError("class ids must be non-negative")
            if tgt.max() < 1:
                raise ValidationError("classification needs at least 2 classes")

        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "task", task)
        self.features.flags.writeable = False
        self.target.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task is not Task.CLASSIFICATION:
            raise ValidationError("n_classes is undefined for regression")
        return int(self.target.max()) + 1


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Model outputs for one dataset: labels or reals, plus optional probabilities."""

    values: np.ndarray
    probabilities: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values)
        if values.ndim != 1:
            raise ValidationError("prediction values must be a 1-D vector")
        if not np.all(np.isfinite(values.astype(np.float64))):
            raise ValidationError("prediction values contain NaN or infinite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.probabilities is not None:
            probs = _as_float_matrix(self.probabilities, "probabilities")
            if probs.shape[0] != values.shape[0]:
                raise ValidationError(
                    f"{probs.shape[0]} probability rows for {values.shape[0]} predictions"
                )
            if probs.shape[1] < 2:
                raise ValidationError("probability matrix needs at least 2 columns")
            if probs.min() < 0.0 or probs.max() > 1.0:
                raise ValidationError("probabilities must lie in [0, 1]")
            row_sums = probs.sum(axis=1)
            if np.max(np.abs(row_sums - 1.0)) > SUM_TOL:
                raise ValidationError("probability rows must sum to 1")
            object.__setattr__(self, "probabilities", probs)

    def __len__(self) -> int:
        return self.values.shape[0]

    def require_length(self, m: int) -> "PredictionSet":
        if len(self) != m:
            raise ValidationError(f"{len(self)} predictions for {m} samples")
        return self


@dataclass(frozen=True, eq=False)
class FeatureImportance:
    """Normalized global importance: a probability vector over features."""

    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        values = _as_float_vector(self.values, "importance values").copy()
        names = tuple(str(n) for n in self.feature_names)
        if values.shape[0] != len(names):
            raise ValidationError(
                f"{values.shape[0]} importance values for {len(names)} names"
            )
        if values.min() < 0.0:
            raise ValidationError("importance values must be non-negative")
        if abs(float(values.sum()) - 1.0) > SUM_TOL:
            raise ValidationError("importance values must sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)
        self.values.flags.writeable = False

    @property
    def n_features(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class LocalImportanceMatrix:
    """Per-sample importance rows, each normalized to a probability vector."""

    rows: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        rows = _as_float_matrix(self.rows, "importance rows").copy()
        names = tuple(str(n) for n in self.feature_names)
        if rows.shape[1] != len(names):
            raise ValidationError(
                f"{rows.shape[1]} importance columns for {len(names)} names"
            )
        if rows.min() < 0.0:
            raise ValidationError("importance rows must be non-negative")
        if np.max(np.abs(rows.sum(axis=1) - 1.0)) > SUM_TOL:
            raise ValidationError("every importance row must sum to 1")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "feature_names", names)
        self.rows.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True, eq=False)
class SubgroupPartition:
    """Disjoint, exhaustive grouping of samples by model output."""

    group_labels: np.ndarray
    group_names: tuple[str, ...]

    def __post_init__(self):
        labels = np.array(self.group_labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValidationError("group labels must be a 1-D vector")
        names = tuple(str(n) for n in self.group_names)
        n_groups = len(names)
        if labels.min(initial=0) < 0 or (labels.size and labels.max() >= n_groups):
            raise ValidationError("group labels must lie in [0, n_groups)")
        counts = np.bincount(labels, minlength=n_groups)
        if np.any(counts == 0):
            empty = [names[i] for i in np.flatnonzero(counts == 0)]
            raise ValidationError(f"empty groups not allowed: {empty}")
        object.__setattr__(self, "group_labels", labels)
        object.__setattr__(self, "group_names", names)
        self.group_labels.flags.writeable = False

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def indices(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.group_labels == group)


def normalize_importance(raw, feature_names) -> FeatureImportance:
    """Clip negatives to zero and rescale to a probability vector.

    An all-zero (or all-negative) input has no mass to distribute and
    falls back to the uniform vector.
    """
    values = _as_float_vector(raw, "raw importance")
    names = tuple(str(n) for n in feature_names)
    if values.shape[0] != len(names):
        raise ValidationError(
            f"{values.shape[0]} raw values for {len(names)} feature names"
        )
    clipped = np.clip(values, 0.0, None)
    total = float(clipped.sum())
    if total <= 0.0:
        normalized = np.full(clipped.shape[0], 1.0 / clipped.shape[0])
    else:
        normalized = clipped / total
    return FeatureImportance(values=normalized, feature_names=names)


def normalize_local(raw, feature_names) -> LocalImportanceMatrix:
    """Row-wise absolute values rescaled to probability rows.

    Signed attributions (SHAP-style exports) lose their sign here; an
    all-zero row becomes uniform.
    """
    matrix = _as_float_matrix(raw, "raw local importance")
    names = tuple(str(n) for n in feature_names)
    if matrix.shape[1] != len(names):
        raise ValidationError(
            f"{matrix.shape[1]} raw columns for {len(names)} feature names"
        )
    magnitude = np.abs(matrix)
    totals = magnitude.sum(axis=1, keepdims=True)
    d = matrix.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        rows = np.where(totals > 0.0, magnitude / np.where(totals > 0, totals, 1.0),
                        1.0 / d)
    return LocalImportanceMatrix(rows=rows, feature_names=names)


QUARTILE_NAMES = ("Q01", "Q12", "Q23", "Q34")


def partition_by_output(dataset: Dataset, predictions: PredictionSet) -> SubgroupPartition:
    """Group samples by predicted class, or by prediction quartile for regression.

    Quartile boundaries are linear-interpolation quantiles of the
    prediction vector with ties assigned to the lower group. Empty
    quartiles (massive ties) are dropped and the survivors renumbered;
    fewer than 2 surviving groups is an error.
    """
    predictions.require_length(dataset.n_samples)
    values = np.asarray(predictions.values, dtype=np.float64)

    if dataset.task is Task.CLASSIFICATION:
        classes = np.unique(values)
        labels = np.searchsorted(classes, values)
        names = tuple(f"class_{int(c)}" for c in classes)
        return SubgroupPartition(group_labels=labels, group_names=names)

    cuts = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    labels = np.searchsorted(cuts, values, side="left")
    present = np.unique(labels)
    if present.size < 2:
        raise ValidationError(
            "fewer than 2 non-empty output quartiles; predictions are too concentrated"
        )
    remap = {int(old): new for new, old in enumerate(present)}
    labels = np.array([remap[int(g)] for g in labels], dtype=np.int64)
    names = tuple(QUARTILE_NAMES[int(old)] for old in present)
    return SubgroupPartition(group_labels=labels, group_names=names)

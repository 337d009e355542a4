"""Explainer outputs the metrics consume.

Three built-in explainers, all driven purely through model handles:
permutation feature importance (global), partial dependence curves,
and mean-replacement occlusion (local). Importance files produced by
outside explainers enter through the report module instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eamex.core import (
    Dataset,
    FeatureImportance,
    LocalImportanceMatrix,
    SubgroupPartition,
    Task,
    ValidationError,
    normalize_importance,
    normalize_local,
)
from eamex.models import ModelHandle
from eamex.rng import RngState

DEFAULT_REPEATS = 5
DEFAULT_GRID_SIZE = 20


@dataclass(frozen=True, eq=False)
class PdpCurve:
    """Average model response while one feature sweeps a grid."""

    feature_index: int
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64).copy()
        values = np.asarray(self.values, dtype=np.float64).copy()
        if grid.ndim != 1 or values.ndim != 1 or grid.shape != values.shape:
            raise ValidationError("grid and values must be 1-D and equally long")
        if grid.shape[0] < 2:
            raise ValidationError("a dependence curve needs at least 2 grid points")
        if not np.all(np.diff(grid) > 0):
            raise ValidationError("grid must be strictly ascending")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise ValidationError("grid and values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        self.grid.flags.writeable = False
        self.values.flags.writeable = False

    @property
    def n_points(self) -> int:
        return self.grid.shape[0]


def _require_live(handle: ModelHandle, what: str):
    if not handle.supports_novel_rows:
        raise ValidationError(
            f"model {handle.name!r} only replays stored predictions and "
            f"cannot serve {what}"
        )


def _predict_values(handle: ModelHandle, rows: np.ndarray) -> np.ndarray:
    return np.asarray(handle.impl.predict(rows))


def _predict_proba_or_none(handle: ModelHandle, rows: np.ndarray) -> np.ndarray | None:
    proba_fn = getattr(handle.impl, "predict_proba", None)
    if proba_fn is None:
        return None
    got = proba_fn(rows)
    return None if got is None else np.asarray(got, dtype=np.float64)


# ---------------------------------------------------------------------------
# permutation feature importance
# ---------------------------------------------------------------------------

def _permutation_score(task: Task, y_true: np.ndarray, values: np.ndarray) -> float:
    if task is Task.CLASSIFICATION:
        return float(np.mean(values.astype(np.int64) == y_true))
    diff = values.astype(np.float64) - y_true
    return -float(np.mean(diff**2))


def permutation_importance(dataset: Dataset, handle: ModelHandle,
                           repeats: int = DEFAULT_REPEATS,
                           rng: RngState | None = None,
                           rows: np.ndarray | None = None,
                           stream_block: int = 0) -> FeatureImportance:
    """Mean score drop when one feature column is shuffled.

    Feature j draws its permutations from stream `block*d + j`, so each
    (subgroup, feature) pair is reproducible regardless of evaluation
    order; the whole-dataset call is block 0.
    """
    _require_live(handle, "permuted feature columns")
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    rng = rng if rng is not None else RngState(seed=0)

    idx = np.arange(dataset.n_samples) if rows is None else np.asarray(rows)
    if idx.shape[0] < 2:
        raise ValidationError("need at least 2 rows to permute")
    X = dataset.features[idx]
    y = dataset.target[idx]
    n = idx.shape[0]
    d = dataset.n_features

    s0 = _permutation_score(dataset.task, y, _predict_values(handle, X))
    drops = np.zeros(d)
    for j in range(d):
        stream = rng.stream(stream_block * d + j)
        shuffled = X.copy()
        total = 0.0
        for _ in range(repeats):
            perm = np.asarray(stream.permutation(n))
            shuffled[:, j] = X[perm, j]
            s = _permutation_score(dataset.task, y,
                                   _predict_values(handle, shuffled))
            total += s0 - s
        drops[j] = total / repeats
    return normalize_importance(drops, dataset.feature_names)


def subgroup_importances(dataset: Dataset, handle: ModelHandle,
                         partition: SubgroupPartition,
                         repeats: int = DEFAULT_REPEATS,
                         rng: RngState | None = None) -> list[FeatureImportance]:
    """Permutation importance restricted to each subgroup's rows."""
    out = []
    for g, name in enumerate(partition.group_names):
        idx = partition.indices(g)
        if idx.shape[0] < 2:
            raise ValidationError(
                f"subgroup {name!r} has {idx.shape[0]} sample(s); need at least 2"
            )
        out.append(permutation_importance(dataset, handle, repeats=repeats,
                                          rng=rng, rows=idx, stream_block=g))
    return out


# ---------------------------------------------------------------------------
# partial dependence
# ---------------------------------------------------------------------------

def _pdp_grid(column: np.ndarray, grid_size: int, feature_name: str) -> np.ndarray:
    unique = np.unique(column)
    if unique.shape[0] <= grid_size:
        grid = unique
    else:
        probs = np.linspace(0.0, 1.0, grid_size)
        grid = np.unique(np.quantile(column, probs, method="linear"))
    if grid.shape[0] < 2:
        raise ValidationError(f"feature {feature_name!r}: constant feature, "
                              f"PDP undefined")
    return grid


def compute_pdp_curves(dataset: Dataset, handle: ModelHandle, feature_index: int,
                       grid_size: int = DEFAULT_GRID_SIZE) -> list[PdpCurve]:
    """Dependence curves for one feature: a single curve for regression
    and binary classification (probability of class 1), one per class
    for multiclass. Classification handles without probabilities fall
    back to predicted labels read as 0/1 indicators.
    """
    _require_live(handle, "partial dependence grids")
    if not 0 <= feature_index < dataset.n_features:
        raise ValidationError(f"feature index {feature_index} out of range")
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")

    name = dataset.feature_names[feature_index]
    grid = _pdp_grid(dataset.features[:, feature_index], grid_size, name)

    if dataset.task is Task.REGRESSION:
        curve = np.empty(grid.shape[0])
        swept = dataset.features.copy()
        for i, v in enumerate(grid):
            swept[:, feature_index] = v
            curve[i] = float(np.mean(_predict_values(handle, swept)))
        return [PdpCurve(feature_index, grid, curve)]

    n_classes = dataset.n_classes
    per_class = np.empty((grid.shape[0], n_classes))
    swept = dataset.features.copy()
    for i, v in enumerate(grid):
        swept[:, feature_index] = v
        proba = _predict_proba_or_none(handle, swept)
        if proba is not None:
            per_class[i] = proba.mean(axis=0)
        else:
            labels = _predict_values(handle, swept).astype(np.int64)
            per_class[i] = np.bincount(labels, minlength=n_classes)[:n_classes] \
                / labels.shape[0]
    if n_classes == 2:
        return [PdpCurve(feature_index, grid, per_class[:, 1])]
    return [PdpCurve(feature_index, grid, per_class[:, c])
            for c in range(n_classes)]


def compute_pdp(dataset: Dataset, handle: ModelHandle, feature_index: int,
                grid_size: int = DEFAULT_GRID_SIZE,
                class_index: int | None = None) -> PdpCurve:
    """The single dependence curve, when one exists.

    Multiclass models produce one curve per class: pass class_index to
    pick one, or call compute_pdp_curves for all of them.
    """
    curves = compute_pdp_curves(dataset, handle, feature_index, grid_size)
    if class_index is not None:
        if dataset.task is not Task.CLASSIFICATION:
            raise ValidationError("class_index only applies to classification")
        if dataset.n_classes == 2:
            raise ValidationError("binary dependence is the class-1 curve; "
                                  "class_index only applies above 2 classes")
        if not 0 <= class_index < len(curves):
            raise ValidationError(f"class index {class_index} out of range")
        return curves[class_index]
    if len(curves) > 1:
        raise ValidationError(
            "multiclass models have one dependence curve per class; "
            "pass class_index or use compute_pdp_curves"
        )
    return curves[0]


# ---------------------------------------------------------------------------
# occlusion local importance
# ---------------------------------------------------------------------------

def occlusion_local_importance(dataset: Dataset,
                               handle: ModelHandle) -> LocalImportanceMatrix:
    """Per-sample sensitivity to replacing one feature by its column mean.

    The compared scalar is the predicted real (regression), the
    probability of class 1 (binary), or the probability of the sample's
    originally predicted class (multiclass). Classification handles
    without probabilities use a label-change indicator instead.
    """
    _require_live(handle, "occluded rows")
    X = dataset.features
    m, d = X.shape
    means = X.mean(axis=0)
    raw = np.empty((m, d))

    if dataset.task is Task.REGRESSION:
        base = _predict_values(handle, X).astype(np.float64)
        occluded = X.copy()
        for j in range(d):
            occluded[:, j] = means[j]
            raw[:, j] = np.abs(base - _predict_values(handle,
                                                      occluded).astype(np.float64))
            occluded[:, j] = X[:, j]
        return normalize_local(raw, dataset.feature_names)

    proba = _predict_proba_or_none(handle, X)
    occluded = X.copy()
    if proba is None:
        base_labels = _predict_values(handle, X).astype(np.int64)
        for j in range(d):
            occluded[:, j] = means[j]
            labels = _predict_values(handle, occluded).astype(np.int64)
            raw[:, j] = (labels != base_labels).astype(np.float64)
            occluded[:, j] = X[:, j]
        return normalize_local(raw, dataset.feature_names)

    if dataset.n_classes == 2:
        base = proba[:, 1]
        pick = None
    else:
        pick = np.argmax(proba, axis=1)
        base = proba[np.arange(m), pick]
    for j in range(d):
        occluded[:, j] = means[j]
        after = _predict_proba_or_none(handle, occluded)
        if after is None:
            raise ValidationError(
                f"model {handle.name!r} stopped returning probabilities mid-run"
            )
        scalar = after[:, 1] if pick is None else after[np.arange(m), pick]
        raw[:, j] = np.abs(base - scalar)
        occluded[:, j] = X[:, j]
    return normalize_local(raw, dataset.feature_names)

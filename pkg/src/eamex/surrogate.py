"""Depth-limited CART surrogate and the three surrogate metrics.

The surrogate mimics a black-box model: it is trained on the model's own
predictions, never on the ground-truth target. Performance degradation is
the exception, comparing both models against the truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eamex.core import Task, ValidationError
from eamex.rng import BOOTSTRAP_STREAM_BASE, RngState

DEFAULT_MAX_DEPTH = 3
DEFAULT_BOOTSTRAPS = 20


@dataclass
class TreeNode:
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: np.ndarray | float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Greedy CART with interpretable depth (3 by default, up to 8 leaves)."""

    root: TreeNode
    task: Task
    n_features: int
    n_classes: int | None
    max_depth: int

    def predict(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValidationError(
                f"expected rows with {self.n_features} columns, got shape {rows.shape}"
            )
        if self.task is Task.CLASSIFICATION:
            return np.array([int(np.argmax(self._leaf(r).value)) for r in rows],
                            dtype=np.int64)
        return np.array([float(self._leaf(r).value) for r in rows], dtype=np.float64)

    def predict_proba(self, rows) -> np.ndarray:
        if self.task is not Task.CLASSIFICATION:
            raise ValidationError("probabilities are only defined for classification")
        rows = np.asarray(rows, dtype=np.float64)
        return np.vstack([self._leaf(r).value for r in rows])

    def _leaf(self, row: np.ndarray) -> TreeNode:
        node = self.root
        while not node.is_leaf:
            node = node.left if row[node.feature_index] <= node.threshold else node.right
        return node

    def selected_features(self) -> frozenset[int]:
        """Indices used by at least one internal node."""
        used: set[int] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                used.add(node.feature_index)
                stack.extend((node.left, node.right))
        return frozenset(used)

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def to_dict(self) -> dict:
        """Deterministic nested export: {feature, threshold, left, right} | {value}."""

        def walk(node: TreeNode) -> dict:
            if node.is_leaf:
                if self.task is Task.CLASSIFICATION:
                    return {"value": [float(v) for v in node.value]}
                return {"value": float(node.value)}
            return {
                "feature": int(node.feature_index),
                "threshold": float(node.threshold),
                "left": walk(node.left),
                "right": walk(node.right),
            }

        return walk(self.root)

    def training_impurity(self, features, target) -> float:
        """Sample-weighted mean leaf impurity on the given data."""
        features = np.asarray(features, dtype=np.float64)
        target = np.asarray(target)
        buckets: dict[int, list[int]] = {}
        for i, row in enumerate(features):
            buckets.setdefault(id(self._leaf(row)), []).append(i)
        total = 0.0
        for idx in buckets.values():
            sub = target[np.asarray(idx)]
            total += len(idx) * _impurity(sub, self.task, self.n_classes)
        return total / features.shape[0]


def _impurity(y: np.ndarray, task: Task, n_classes: int | None) -> float:
    if task is Task.CLASSIFICATION:
        counts = np.bincount(y.astype(np.int64), minlength=n_classes)
        n = counts.sum()
        if n == 0:
            return 0.0
        p = counts / n
        return float(1.0 - np.sum(p * p))
    if y.size == 0:
        return 0.0
    mu = float(np.mean(y))
    return float(np.mean((y - mu) ** 2))


def _leaf_value(y: np.ndarray, task: Task, n_classes: int | None):
    if task is Task.CLASSIFICATION:
        counts = np.bincount(y.astype(np.int64), minlength=n_classes)
        return counts / counts.sum()
    return float(np.mean(y))


def _best_split(x: np.ndarray, y: np.ndarray, task: Task, n_classes: int | None):
    """Best (threshold, impurity decrease) for one feature column.

    Candidate thresholds are midpoints of consecutive sorted unique values;
    within a feature, ties in decrease keep the lowest threshold.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.shape[0]
    # boundary positions: xs[pos-1] < xs[pos]
    boundaries = np.flatnonzero(xs[1:] != xs[:-1]) + 1
    if boundaries.size == 0:
        return None, 0.0

    parent = _impurity(ys, task, n_classes)
    if task is Task.CLASSIFICATION:
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys.astype(np.int64)] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        left_counts = prefix[boundaries - 1]
        right_counts = prefix[-1] - left_counts
        n_left = boundaries.astype(np.float64)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        weighted = (n_left * gini_left + n_right * gini_right) / n
    else:
        prefix = np.cumsum(ys)
        prefix_sq = np.cumsum(ys**2)
        n_left = boundaries.astype(np.float64)
        n_right = n - n_left
        sum_left = prefix[boundaries - 1]
        sum_right = prefix[-1] - sum_left
        sq_left = prefix_sq[boundaries - 1]
        sq_right = prefix_sq[-1] - sq_left
        var_left = np.maximum(sq_left / n_left - (sum_left / n_left) ** 2, 0.0)
        var_right = np.maximum(sq_right / n_right - (sum_right / n_right) ** 2, 0.0)
        weighted = (n_left * var_left + n_right * var_right) / n

    decreases = parent - weighted
    best = int(np.argmax(decreases))  # first max: lowest threshold wins ties
    thresholds = (xs[boundaries - 1] + xs[boundaries]) / 2.0
    return float(thresholds[best]), float(decreases[best])


def _grow(features: np.ndarray, y: np.ndarray, depth: int, max_depth: int,
          task: Task, n_classes: int | None) -> TreeNode:
    node = TreeNode(value=_leaf_value(y, task, n_classes))
    if depth >= max_depth or y.shape[0] < 2:
        return node
    if _impurity(y, task, n_classes) <= 0.0:
        return node

    # zero-decrease splits are still taken (a symmetric pattern like XOR
    # only pays off one level deeper); only depth/size/purity stop growth
    best_feature, best_threshold, best_decrease = None, None, -np.inf
    for j in range(features.shape[1]):
        threshold, decrease = _best_split(features[:, j], y, task, n_classes)
        if threshold is not None and decrease > best_decrease:
            best_feature, best_threshold, best_decrease = j, threshold, decrease

    if best_feature is None:
        return node

    mask = features[:, best_feature] <= best_threshold
    node.feature_index = best_feature
    node.threshold = best_threshold
    node.value = None
    node.left = _grow(features[mask], y[mask], depth + 1, max_depth, task, n_classes)
    node.right = _grow(features[~mask], y[~mask], depth + 1, max_depth, task, n_classes)
    return node


def fit_surrogate(features, target, task: Task, max_depth: int = DEFAULT_MAX_DEPTH,
                  n_classes: int | None = None) -> DecisionTree:
    """Greedy CART on (features, model predictions).

    Gini impurity on predicted labels for classification, variance (MSE)
    on predicted reals for regression. Degenerate targets yield a
    single-leaf tree; that is not an error.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValidationError("features must be a 2-D matrix")
    if features.shape[0] < 2:
        raise ValidationError("need at least 2 samples to fit a surrogate")
    if task is Task.CLASSIFICATION:
        y = np.asarray(target, dtype=np.int64)
        if n_classes is None:
            n_classes = int(y.max()) + 1
    else:
        y = np.asarray(target, dtype=np.float64)
        n_classes = None
    if y.shape[0] != features.shape[0]:
        raise ValidationError("target length must match number of rows")

    root = _grow(features, y, 0, max_depth, task, n_classes)
    return DecisionTree(root=root, task=task, n_features=features.shape[1],
                        n_classes=n_classes, max_depth=max_depth)


def performance_degradation(p_base: float, p_surrogate: float, task: Task) -> float:
    """Relative performance gap between original model and surrogate.

    Classification compares accuracies and is deliberately unclamped (a
    surrogate beating the original goes negative); regression compares
    MSEs and clamps at zero. Both perfect / both zero-error is 0.
    """
    if p_base < 0 or p_surrogate < 0:
        raise ValidationError("performance values must be non-negative")
    denom = p_base + p_surrogate
    if denom == 0.0:
        return 0.0
    if task is Task.CLASSIFICATION:
        return 2.0 * (p_base - p_surrogate) / denom
    return max(0.0, 2.0 * (p_surrogate - p_base) / denom)


def surrogate_fidelity(y_pred, y_surrogate, task: Task) -> float:
    """Agreement between original and surrogate predictions.

    Classification: exact match rate. Regression: one minus the mean
    relative error |a-b|/max(|a|,|b|), a both-zero pair contributing 0.
    """
    a = np.asarray(y_pred, dtype=np.float64)
    b = np.asarray(y_surrogate, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("prediction vectors must be 1-D and equally long")
    if a.size == 0:
        raise ValidationError("need at least one prediction")
    if task is Task.CLASSIFICATION:
        return float(np.mean(a == b))
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(scale > 0.0, np.abs(a - b) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(1.0 - np.mean(terms))


def _jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def surrogate_feature_stability(features, y_pred, task: Task, k: int = DEFAULT_BOOTSTRAPS,
                                rng: RngState | None = None,
                                max_depth: int = DEFAULT_MAX_DEPTH,
                                n_classes: int | None = None,
                                ) -> tuple[float, frozenset[int], list[frozenset[int]]]:
    """Mean Jaccard overlap between full-fit feature set and bootstrap refits.

    Returns (stability, original feature set, per-bootstrap feature sets).
    Bootstrap i draws from its own pre-split stream, so replicates are
    schedule-independent. Empty vs empty counts as perfect overlap.
    """
    if k < 1:
        raise ValidationError("need at least one bootstrap replicate")
    rng = rng if rng is not None else RngState(seed=0)
    features = np.asarray(features, dtype=np.float64)
    y = np.asarray(y_pred)
    m = features.shape[0]

    base = fit_surrogate(features, y, task, max_depth=max_depth, n_classes=n_classes)
    original = base.selected_features()
    if task is Task.CLASSIFICATION and n_classes is None:
        n_classes = base.n_classes

    sets: list[frozenset[int]] = []
    for i in range(k):
        stream = rng.stream(BOOTSTRAP_STREAM_BASE + i)
        idx = np.array(stream.choices(m, m), dtype=np.int64)
        refit = fit_surrogate(features[idx], y[idx], task, max_depth=max_depth,
                              n_classes=n_classes)
        sets.append(refit.selected_features())

    stability = float(np.mean([_jaccard(original, s) for s in sets]))
    return stability, original, sets

"""Black-box model handles: built-in baselines, prediction tables, scoring.

Every metric consumes models through the same tiny surface — a handle
whose implementation answers `predict(rows)` (and, for classification,
optionally `predict_proba(rows)`). External subprocess handles live in
`eamex.external` and satisfy the same surface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from eamex.core import Dataset, PredictionSet, Task, ValidationError
from eamex.surrogate import DecisionTree, fit_surrogate

LINEAR_RIDGE_JITTER = 1e-8
LOGISTIC_L2 = 1e-6


class ModelFitError(RuntimeError):
    """Training failed (singular system, diverging loss)."""


class TableLookupError(ValidationError):
    """A prediction table was asked about a row it has never seen."""


class ModelKind(enum.Enum):
    BUILTIN_LINEAR = "builtin_linear"
    BUILTIN_LOGISTIC = "builtin_logistic"
    BUILTIN_TREE = "builtin_tree"
    PRECOMPUTED_TABLE = "precomputed_table"
    EXTERNAL_PROCESS = "external_process"


@dataclass(frozen=True, eq=False)
class ModelHandle:
    """A named prediction function plus the facts needed to validate queries."""

    kind: ModelKind
    task: Task
    name: str
    n_features: int
    impl: object

    @property
    def supports_novel_rows(self) -> bool:
        """Tables replay stored rows only; everything else predicts anywhere."""
        return self.kind is not ModelKind.PRECOMPUTED_TABLE


@dataclass(frozen=True, eq=False)
class EfficacyScores:
    """Task-appropriate performance numbers against the true target."""

    task: Task
    accuracy: float | None = None
    f1_macro: float | None = None
    rmse: float | None = None
    smape: float | None = None
    mse: float | None = None

    def as_dict(self) -> dict[str, float]:
        if self.task is Task.CLASSIFICATION:
            return {"accuracy": self.accuracy, "f1_macro": self.f1_macro}
        return {"rmse": self.rmse, "smape": self.smape, "mse": self.mse}

    @property
    def primary(self) -> float:
        """The value degradation compares: accuracy, or MSE for regression."""
        return self.accuracy if self.task is Task.CLASSIFICATION else self.mse


# ---------------------------------------------------------------------------
# built-in linear regression
# ---------------------------------------------------------------------------

class _LinearImpl:
    def __init__(self, coef: np.ndarray, intercept: float):
        self.coef = coef
        self.intercept = intercept

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.coef + self.intercept


def fit_linear(dataset: Dataset, name: str = "linear") -> ModelHandle:
    """Ordinary least squares via normal equations.

    A ridge jitter on the Gram diagonal keeps nearly collinear designs
    solvable; a system still singular after the jitter is an error.
    """
    if dataset.task is not Task.REGRESSION:
        raise ValidationError("linear regression requires a regression task")
    m, d = dataset.features.shape
    design = np.hstack([dataset.features, np.ones((m, 1))])
    gram = design.T @ design + LINEAR_RIDGE_JITTER * np.eye(d + 1)
    rhs = design.T @ dataset.target
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelFitError(f"normal equations are singular: {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise ModelFitError("normal equations produced non-finite coefficients")
    impl = _LinearImpl(coef=beta[:d], intercept=float(beta[d]))
    return ModelHandle(kind=ModelKind.BUILTIN_LINEAR, task=dataset.task,
                       name=name, n_features=d, impl=impl)


# ---------------------------------------------------------------------------
# built-in logistic regression
# ---------------------------------------------------------------------------

def _log1pexp(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z) without overflow
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _fit_binary_logistic(X: np.ndarray, y: np.ndarray, max_iter: int,
                         tol: float) -> tuple[np.ndarray, float]:
    """Gradient descent with backtracking halving on L2-regularized log-loss."""
    m, d = X.shape
    w = np.zeros(d)
    b = 0.0

    def loss(wv, bv):
        z = X @ wv + bv
        data = float(np.mean(_log1pexp(z) - y * z))
        return data + 0.5 * LOGISTIC_L2 * float(wv @ wv)

    current = loss(w, b)
    for _ in range(max_iter):
        p = _sigmoid(X @ w + b)
        residual = p - y
        grad_w = X.T @ residual / m + LOGISTIC_L2 * w
        grad_b = float(np.mean(residual))
        if max(float(np.max(np.abs(grad_w))), abs(grad_b)) < tol:
            break
        step = 1.0
        for _ in range(60):
            cand = loss(w - step * grad_w, b - step * grad_b)
            if np.isfinite(cand) and cand < current:
                break
            step *= 0.5
        else:
            break  # no descent direction at any step: converged numerically
        w = w - step * grad_w
        b = b - step * grad_b
        current = cand
        if not np.isfinite(current):
            raise ModelFitError("logistic loss became non-finite")
    return w, b


class _LogisticImpl:
    def __init__(self, weights: np.ndarray, intercepts: np.ndarray, n_classes: int):
        self.weights = weights        # one row per fitted classifier
        self.intercepts = intercepts
        self.n_classes = n_classes

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        scores = _sigmoid(rows @ self.weights.T + self.intercepts)
        if self.n_classes == 2:
            p1 = scores[:, 0]
            return np.column_stack([1.0 - p1, p1])
        totals = scores.sum(axis=1, keepdims=True)
        uniform = np.full_like(scores, 1.0 / self.n_classes)
        return np.where(totals > 0.0, scores / np.where(totals > 0, totals, 1.0),
                        uniform)

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(rows), axis=1).astype(np.int64)


def fit_logistic(dataset: Dataset, max_iter: int = 200, tol: float = 1e-8,
                 name: str = "logistic") -> ModelHandle:
    """Logistic regression; one-vs-rest above two classes."""
    if dataset.task is not Task.CLASSIFICATION:
        raise ValidationError("logistic regression requires a classification task")
    X = dataset.features
    n_classes = dataset.n_classes
    if n_classes == 2:
        w, b = _fit_binary_logistic(X, (dataset.target == 1).astype(np.float64),
                                    max_iter, tol)
        impl = _LogisticImpl(weights=w[None, :], intercepts=np.array([b]),
                             n_classes=2)
    else:
        rows, offsets = [], []
        for c in range(n_classes):
            w, b = _fit_binary_logistic(X, (dataset.target == c).astype(np.float64),
                                        max_iter, tol)
            rows.append(w)
            offsets.append(b)
        impl = _LogisticImpl(weights=np.vstack(rows), intercepts=np.array(offsets),
                             n_classes=n_classes)
    return ModelHandle(kind=ModelKind.BUILTIN_LOGISTIC, task=dataset.task,
                       name=name, n_features=dataset.n_features, impl=impl)


# ---------------------------------------------------------------------------
# built-in depth-limited tree (same CART as the surrogate, fit on the truth)
# ---------------------------------------------------------------------------

class _TreeImpl:
    def __init__(self, tree: DecisionTree):
        self.tree = tree

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return self.tree.predict(rows)

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return self.tree.predict_proba(rows)


def fit_tree(dataset: Dataset, max_depth: int = 3, name: str = "tree") -> ModelHandle:
    """Depth-limited CART trained on the true target."""
    n_classes = dataset.n_classes if dataset.task is Task.CLASSIFICATION else None
    tree = fit_surrogate(dataset.features, dataset.target, dataset.task,
                         max_depth=max_depth, n_classes=n_classes)
    return ModelHandle(kind=ModelKind.BUILTIN_TREE, task=dataset.task,
                       name=name, n_features=dataset.n_features, impl=_TreeImpl(tree))


# ---------------------------------------------------------------------------
# precomputed prediction table
# ---------------------------------------------------------------------------

class _TableImpl:
    def __init__(self, keys: np.ndarray, values: np.ndarray,
                 probabilities: np.ndarray | None):
        self.keys = np.ascontiguousarray(keys, dtype=np.float64)
        self.values = values
        self.probabilities = probabilities
        self._index = {row.tobytes(): i for i, row in enumerate(self.keys)}

    def _locate(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        if rows.shape == self.keys.shape and np.array_equal(rows, self.keys):
            return np.arange(rows.shape[0])
        out = np.empty(rows.shape[0], dtype=np.int64)
        for i, row in enumerate(rows):
            idx = self._index.get(row.tobytes())
            if idx is None:
                raise TableLookupError(
                    "prediction table has no entry for a queried row; "
                    "tables only replay their stored dataset"
                )
            out[i] = idx
        return out

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return self.values[self._locate(rows)]

    def predict_proba(self, rows: np.ndarray) -> np.ndarray | None:
        if self.probabilities is None:
            return None
        return self.probabilities[self._locate(rows)]


def precomputed_table(dataset: Dataset, predictions: PredictionSet,
                      name: str = "table") -> ModelHandle:
    """Replay stored predictions for the dataset's exact rows."""
    predictions.require_length(dataset.n_samples)
    values = np.asarray(predictions.values, dtype=np.float64)
    if dataset.task is Task.CLASSIFICATION:
        if not np.all(values == np.round(values)):
            raise ValidationError("classification predictions must be integer labels")
        values = values.astype(np.int64)
    impl = _TableImpl(keys=dataset.features, values=values,
                      probabilities=predictions.probabilities)
    return ModelHandle(kind=ModelKind.PRECOMPUTED_TABLE, task=dataset.task,
                       name=name, n_features=dataset.n_features, impl=impl)


# ---------------------------------------------------------------------------
# prediction and scoring
# ---------------------------------------------------------------------------

def predict(handle: ModelHandle, rows) -> PredictionSet:
    """Run the model on rows; classification handles attach probabilities."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != handle.n_features:
        raise ValidationError(
            f"model {handle.name!r} expects {handle.n_features} columns, "
            f"got shape {tuple(rows.shape)}"
        )
    values = np.asarray(handle.impl.predict(rows))
    probabilities = None
    if handle.task is Task.CLASSIFICATION:
        proba_fn = getattr(handle.impl, "predict_proba", None)
        if proba_fn is not None:
            got = proba_fn(rows)
            probabilities = None if got is None else np.asarray(got, dtype=np.float64)
    return PredictionSet(values=values, probabilities=probabilities)


def _f1_macro(target: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    scores = []
    for c in range(n_classes):
        tp = float(np.sum((labels == c) & (target == c)))
        fp = float(np.sum((labels == c) & (target != c)))
        fn = float(np.sum((labels != c) & (target == c)))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        if precision + recall == 0.0:
            scores.append(0.0)
        else:
            scores.append(2.0 * precision * recall / (precision + recall))
    return float(np.mean(scores))


def score(dataset: Dataset, predictions: PredictionSet) -> EfficacyScores:
    """Efficacy against the true target; the inputs to degradation."""
    predictions.require_length(dataset.n_samples)
    values = np.asarray(predictions.values, dtype=np.float64)
    if dataset.task is Task.CLASSIFICATION:
        labels = values.astype(np.int64)
        target = dataset.target
        accuracy = float(np.mean(labels == target))
        f1 = _f1_macro(target, labels, dataset.n_classes)
        return EfficacyScores(task=dataset.task, accuracy=accuracy, f1_macro=f1)
    diff = values - dataset.target
    mse = float(np.mean(diff**2))
    denom = (np.abs(dataset.target) + np.abs(values)) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(denom > 0.0, np.abs(diff) / np.where(denom > 0, denom, 1.0),
                         0.0)
    return EfficacyScores(task=dataset.task, rmse=float(np.sqrt(mse)),
                          smape=float(np.mean(terms)), mse=mse)

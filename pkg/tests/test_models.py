"""Tests for the built-in models, prediction tables, and scoring."""

import numpy as np
import pytest

from eamex import Dataset, PredictionSet, Task, ValidationError
from eamex.models import (
    EfficacyScores,
    ModelKind,
    TableLookupError,
    fit_linear,
    fit_logistic,
    fit_tree,
    precomputed_table,
    predict,
    score,
)


class TestFitLinear:
    def test_recovers_exact_slope(self):
        x = np.linspace(-2.0, 2.0, 20).reshape(-1, 1)
        ds = Dataset(x, ("x",), 2.0 * x[:, 0], Task.REGRESSION)
        handle = fit_linear(ds)
        np.testing.assert_allclose(handle.impl.coef, [2.0], atol=1e-6)
        np.testing.assert_allclose(handle.impl.intercept, 0.0, atol=1e-6)

    def test_constant_target(self):
        x = np.linspace(0.0, 1.0, 10).reshape(-1, 1)
        ds = Dataset(x, ("x",), np.full(10, 3.5), Task.REGRESSION)
        handle = fit_linear(ds)
        np.testing.assert_allclose(handle.impl.coef, [0.0], atol=1e-6)
        np.testing.assert_allclose(handle.impl.intercept, 3.5, atol=1e-6)

    def test_matches_explicit_normal_equation_oracle(self):
        rng = np.random.default_rng(41)
        X = rng.normal(size=(100, 2))
        y = 3.0 * X[:, 0] + 1.0 * X[:, 1]
        ds = Dataset(X, ("a", "b"), y, Task.REGRESSION)
        handle = fit_linear(ds)
        # centered data has zero-mean target here, so solve the 2x2 system
        # (X^T X) beta = X^T y by the explicit inverse formula
        g = X.T @ X
        rhs = X.T @ y
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        beta0 = (g[1, 1] * rhs[0] - g[0, 1] * rhs[1]) / det
        beta1 = (g[0, 0] * rhs[1] - g[1, 0] * rhs[0]) / det
        np.testing.assert_allclose(handle.impl.coef, [beta0, beta1], atol=1e-6)
        np.testing.assert_allclose(handle.impl.coef, [3.0, 1.0], atol=1e-6)

    def test_noiseless_fit_has_tiny_error(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(50, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + 4.0
        ds = Dataset(X, ("a", "b", "c"), y, Task.REGRESSION)
        handle = fit_linear(ds)
        scores = score(ds, predict(handle, ds.features))
        assert scores.rmse <= 1e-6

    def test_rejects_classification_task(self):
        ds = Dataset(np.ones((4, 1)) * np.arange(4)[:, None], ("x",),
                     [0, 1, 0, 1], Task.CLASSIFICATION)
        with pytest.raises(ValidationError):
            fit_linear(ds)


class TestFitLogistic:
    def test_separable_1d(self):
        x = np.array([-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]).reshape(-1, 1)
        y = (x[:, 0] > 0).astype(int)
        ds = Dataset(x, ("x",), y, Task.CLASSIFICATION)
        handle = fit_logistic(ds)
        preds = predict(handle, ds.features)
        assert score(ds, preds).accuracy == 1.0

    def test_single_class_rejected_at_dataset_level(self):
        with pytest.raises(ValidationError):
            Dataset(np.arange(4.0).reshape(-1, 1), ("x",), [0, 0, 0, 0],
                    Task.CLASSIFICATION)

    def test_blobs_match_grid_search_oracle(self):
        rng = np.random.default_rng(43)
        a = rng.normal(loc=(-1.0, -1.0), scale=0.7, size=(20, 2))
        b = rng.normal(loc=(1.0, 1.0), scale=0.7, size=(20, 2))
        X = np.vstack([a, b])
        y = np.array([0] * 20 + [1] * 20)
        ds = Dataset(X, ("u", "v"), y, Task.CLASSIFICATION)
        handle = fit_logistic(ds)
        ours = score(ds, predict(handle, ds.features)).accuracy

        # brute-force oracle: minimize log-loss over (w1, w2, b) on a
        # 0.01-step grid, then measure that fit's training accuracy
        grid = np.arange(-0.6, 0.6 + 1e-9, 0.01)
        W = np.array(np.meshgrid(grid, grid)).reshape(2, -1).T   # (G^2, 2)
        base = X @ W.T                                           # (40, G^2)
        sign = np.where(y[:, None] == 1, 1.0, -1.0)
        best_loss, best = np.inf, None
        for b0 in grid:
            losses = np.logaddexp(0.0, -sign * (base + b0)).mean(axis=0)
            i = int(np.argmin(losses))
            if losses[i] < best_loss:
                best_loss, best = float(losses[i]), (W[i], b0)
        w_star, b_star = best
        oracle_labels = ((X @ w_star + b_star) >= 0).astype(int)
        oracle_acc = float(np.mean(oracle_labels == y))

        assert ours >= 0.95
        assert ours >= oracle_acc - 0.05

    def test_multiclass_one_vs_rest(self):
        rng = np.random.default_rng(44)
        centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        X = np.vstack([rng.normal(loc=c, scale=0.5, size=(15, 2)) for c in centers])
        y = np.repeat([0, 1, 2], 15)
        ds = Dataset(X, ("u", "v"), y, Task.CLASSIFICATION)
        handle = fit_logistic(ds)
        preds = predict(handle, ds.features)
        assert score(ds, preds).accuracy >= 0.9
        np.testing.assert_allclose(preds.probabilities.sum(axis=1), 1.0, atol=1e-9)

    def test_rejects_regression_task(self):
        ds = Dataset(np.arange(4.0).reshape(-1, 1), ("x",), np.arange(4.0),
                     Task.REGRESSION)
        with pytest.raises(ValidationError):
            fit_logistic(ds)


class TestFitTree:
    def test_classification_fits_simple_rule(self):
        x = np.linspace(0.0, 1.0, 20).reshape(-1, 1)
        y = (x[:, 0] > 0.45).astype(int)
        ds = Dataset(x, ("x",), y, Task.CLASSIFICATION)
        handle = fit_tree(ds)
        assert handle.kind is ModelKind.BUILTIN_TREE
        preds = predict(handle, ds.features)
        assert score(ds, preds).accuracy == 1.0
        assert preds.probabilities is not None

    def test_regression_piecewise_constant(self):
        x = np.linspace(0.0, 1.0, 16).reshape(-1, 1)
        y = np.where(x[:, 0] < 0.5, 1.0, 5.0)
        ds = Dataset(x, ("x",), y, Task.REGRESSION)
        handle = fit_tree(ds)
        scores = score(ds, predict(handle, ds.features))
        assert scores.mse <= 1e-12


class TestPrecomputedTable:
    def test_replays_stored_predictions(self):
        rng = np.random.default_rng(45)
        X = rng.normal(size=(6, 2))
        ds = Dataset(X, ("a", "b"), rng.normal(size=6), Task.REGRESSION)
        stored = PredictionSet(rng.normal(size=6))
        handle = precomputed_table(ds, stored)
        got = predict(handle, ds.features)
        np.testing.assert_array_equal(got.values, stored.values)
        assert not handle.supports_novel_rows

    def test_row_order_does_not_matter(self):
        rng = np.random.default_rng(46)
        X = rng.normal(size=(5, 2))
        ds = Dataset(X, ("a", "b"), rng.normal(size=5), Task.REGRESSION)
        stored = PredictionSet(np.arange(5.0))
        handle = precomputed_table(ds, stored)
        got = predict(handle, ds.features[::-1])
        np.testing.assert_array_equal(got.values, stored.values[::-1])

    def test_unknown_row_raises_lookup_error(self):
        X = np.arange(8.0).reshape(4, 2)
        ds = Dataset(X, ("a", "b"), np.zeros(4), Task.REGRESSION)
        handle = precomputed_table(ds, PredictionSet(np.ones(4)))
        with pytest.raises(TableLookupError):
            predict(handle, np.array([[100.0, 100.0]]))

    def test_classification_labels_must_be_integers(self):
        X = np.arange(8.0).reshape(4, 2)
        ds = Dataset(X, ("a", "b"), [0, 1, 0, 1], Task.CLASSIFICATION)
        with pytest.raises(ValidationError):
            precomputed_table(ds, PredictionSet(np.array([0.0, 0.5, 1.0, 0.0])))


class TestPredict:
    def test_linear_example(self):
        x = np.array([[-1.0], [0.0], [1.0], [2.0]])
        ds = Dataset(x, ("x",), 2.0 * x[:, 0], Task.REGRESSION)
        handle = fit_linear(ds)
        got = predict(handle, np.array([[1.0], [3.0]]))
        np.testing.assert_allclose(got.values, [2.0, 6.0], atol=1e-6)
        assert got.probabilities is None

    def test_is_pure(self):
        rng = np.random.default_rng(47)
        X = rng.normal(size=(30, 2))
        y = (X[:, 0] > 0).astype(int)
        ds = Dataset(X, ("a", "b"), y, Task.CLASSIFICATION)
        handle = fit_logistic(ds)
        first = predict(handle, ds.features)
        second = predict(handle, ds.features)
        np.testing.assert_array_equal(first.values, second.values)
        np.testing.assert_array_equal(first.probabilities, second.probabilities)

    def test_rejects_wrong_width(self):
        x = np.arange(6.0).reshape(-1, 1)
        ds = Dataset(x, ("x",), x[:, 0], Task.REGRESSION)
        handle = fit_linear(ds)
        with pytest.raises(ValidationError):
            predict(handle, np.ones((2, 3)))


class TestScore:
    def test_perfect_classification(self):
        X = np.arange(8.0).reshape(4, 2)
        ds = Dataset(X, ("a", "b"), [0, 1, 1, 0], Task.CLASSIFICATION)
        s = score(ds, PredictionSet(np.array([0, 1, 1, 0])))
        assert s.accuracy == 1.0
        assert s.f1_macro == 1.0
        assert s.primary == 1.0

    def test_absent_class_contributes_zero_f1(self):
        X = np.arange(8.0).reshape(4, 2)
        ds = Dataset(X, ("a", "b"), [0, 2, 2, 0], Task.CLASSIFICATION)
        s = score(ds, PredictionSet(np.array([0, 2, 2, 0])))
        np.testing.assert_allclose(s.f1_macro, 2.0 / 3.0)

    def test_perfect_regression(self):
        X = np.arange(8.0).reshape(4, 2)
        y = np.array([1.0, 2.0, 3.0, 4.0])
        ds = Dataset(X, ("a", "b"), y, Task.REGRESSION)
        s = score(ds, PredictionSet(y.copy()))
        assert s.rmse == 0.0
        assert s.smape == 0.0
        assert s.mse == 0.0
        assert s.primary == 0.0

    def test_hand_worked_regression_example(self):
        X = np.arange(4.0).reshape(2, 2)
        ds = Dataset(X, ("a", "b"), [1.0, 3.0], Task.REGRESSION)
        s = score(ds, PredictionSet(np.array([2.0, 3.0])))
        np.testing.assert_allclose(s.rmse, np.sqrt(0.5), atol=1e-12)
        np.testing.assert_allclose(s.smape, (2.0 / 3.0 + 0.0) / 2.0, atol=1e-12)

    def test_smape_zero_over_zero_is_zero(self):
        X = np.arange(4.0).reshape(2, 2)
        ds = Dataset(X, ("a", "b"), [0.0, 1.0], Task.REGRESSION)
        s = score(ds, PredictionSet(np.array([0.0, 1.0])))
        assert s.smape == 0.0

    def test_as_dict_keys_follow_task(self):
        assert set(EfficacyScores(Task.CLASSIFICATION, accuracy=1.0,
                                  f1_macro=1.0).as_dict()) == {"accuracy",
                                                               "f1_macro"}
        assert set(EfficacyScores(Task.REGRESSION, rmse=0.0, smape=0.0,
                                  mse=0.0).as_dict()) == {"rmse", "smape", "mse"}

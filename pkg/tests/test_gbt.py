"""Residual boosting, early stopping, and depth tuning."""

import numpy as np
import pytest

from ltboost.cart import predict_tree
from ltboost.dataset import Dataset, mse
from ltboost.errors import DataError, FitError
from ltboost.gbt import (BoostedEnsemble, EarlyStopConfig, boost_residuals,
                         fit_gbt, fit_gbt_tuned, predict_ensemble)


def step_problem(rng, n=200, noise=0.3):
    x = rng.uniform(-1, 1, size=(n, 1))
    y = (x[:, 0] >= 0).astype(np.float64) + noise * rng.normal(size=n)
    return Dataset(x, y)


def interaction_problem(rng, n=400):
    x1 = rng.uniform(-4, 4, n)
    x2 = (rng.random(n) < 0.5).astype(np.float64)
    y = -0.5 * x1 + x2 * x1 * x1 / 2.75 + x2 + rng.normal(size=n)
    return Dataset(np.column_stack([x1, x2]), y)


class TestFitGbt:
    def test_constant_outcome_zero_trees(self, rng):
        train = Dataset(rng.normal(size=(30, 2)), np.full(30, 2.0))
        val = Dataset(rng.normal(size=(10, 2)), np.full(10, 3.0))
        model = fit_gbt(train, val, depth=2)
        assert model.n_trees == 0
        assert model.base_prediction == 2.0
        assert model.base_validation_loss == pytest.approx(1.0)

    def test_training_loss_non_increasing(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=1)
        assert model.n_trees > 0
        preds = np.full(train.n, model.base_prediction)
        losses = [mse(preds, train.outcome)]
        for tree in model.trees:
            preds = preds + model.learning_rate * predict_tree(tree, train.features)
            losses.append(mse(preds, train.outcome))
        assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))

    def test_returns_argmin_of_validation_curve(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=2)
        assert model.validation_curve
        assert model.best_validation_loss == min(model.validation_curve)
        assert model.validation_curve[-1] == model.best_validation_loss

    def test_validation_curve_matches_recomputation(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=1)
        preds = np.full(val.n, model.base_prediction)
        for k, tree in enumerate(model.trees):
            preds = preds + model.learning_rate * predict_tree(tree, val.features)
            assert model.validation_curve[k] == pytest.approx(
                mse(preds, val.outcome), rel=1e-12)

    def test_infinite_epsilon_runs_to_max_trees(self, rng):
        # validating on the training rows makes the curve non-increasing, so
        # the argmin truncation keeps every tree the loop grew
        data = step_problem(rng)
        train = data.take(np.arange(150))
        config = EarlyStopConfig(epsilon=float("inf"), max_trees=17)
        model = fit_gbt(train, train, depth=1, config=config)
        assert model.n_trees == 17

    def test_empty_datasets_rejected(self, rng):
        data = step_problem(rng)
        empty = Dataset(np.zeros((0, 1)), np.zeros(0))
        with pytest.raises(FitError, match="nonempty"):
            fit_gbt(data, empty, depth=1)

    def test_bad_depth_and_rate(self, rng):
        data = step_problem(rng, n=20)
        with pytest.raises(DataError, match="depth"):
            fit_gbt(data, data, depth=0)
        with pytest.raises(DataError, match="learning_rate"):
            fit_gbt(data, data, depth=1, learning_rate=0.0)

    def test_config_validation(self):
        with pytest.raises(DataError, match="patience"):
            EarlyStopConfig(patience=0)
        with pytest.raises(DataError, match="epsilon"):
            EarlyStopConfig(epsilon=-1.0)


class TestPredictEnsemble:
    def test_zero_trees_constant(self):
        model = BoostedEnsemble(base_prediction=1.5)
        out = predict_ensemble(model, np.zeros((4, 2)))
        np.testing.assert_array_equal(out, np.full(4, 1.5))

    def test_single_tree_unit_rate_identity(self, rng):
        data = step_problem(rng, n=50)
        model = fit_gbt(data, data, depth=1, learning_rate=1.0,
                        config=EarlyStopConfig(max_trees=1))
        if model.n_trees == 1:
            got = predict_ensemble(model, data.features)
            want = model.base_prediction + predict_tree(model.trees[0], data.features)
            np.testing.assert_allclose(got, want, rtol=0, atol=0)

    def test_matches_naive_summation(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=2)
        queries = rng.normal(size=(20, 1))
        naive = np.full(20, model.base_prediction)
        for tree in model.trees:
            naive = naive + model.learning_rate * predict_tree(tree, queries)
        np.testing.assert_allclose(predict_ensemble(model, queries), naive,
                                   rtol=1e-12, atol=1e-12)

    def test_dropping_last_tree_is_linear(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=1)
        assert model.n_trees >= 2
        shorter = BoostedEnsemble(trees=model.trees[:-1],
                                  learning_rate=model.learning_rate,
                                  base_prediction=model.base_prediction,
                                  depth=model.depth)
        queries = rng.normal(size=(15, 1))
        delta = predict_ensemble(model, queries) - predict_ensemble(shorter, queries)
        want = model.learning_rate * predict_tree(model.trees[-1], queries)
        np.testing.assert_allclose(delta, want, rtol=0, atol=1e-12)


class TestBoostResiduals:
    def test_extends_in_place_and_counts(self, rng):
        data = step_problem(rng)
        train, val = data.take(np.arange(150)), data.take(np.arange(150, 200))
        model = fit_gbt(train, val, depth=1)
        trees = list(model.trees)
        preds = predict_ensemble(model, train.features)
        added = boost_residuals(trees, train, preds, n_new=5, depth=1,
                                learning_rate=model.learning_rate)
        assert added == 5
        assert len(trees) == model.n_trees + 5
        np.testing.assert_allclose(
            preds,
            predict_ensemble(BoostedEnsemble(trees=trees,
                                             learning_rate=model.learning_rate,
                                             base_prediction=model.base_prediction),
                             train.features),
            rtol=1e-12, atol=1e-12)

    def test_stops_on_zero_tree(self, rng):
        train = Dataset(rng.normal(size=(20, 1)), np.full(20, 1.0))
        trees = []
        preds = np.full(20, 1.0)
        added = boost_residuals(trees, train, preds, n_new=4, depth=1,
                                learning_rate=0.05)
        assert added == 0 and trees == []


class TestFitGbtTuned:
    def test_deterministic(self, rng):
        data = interaction_problem(rng)
        train, val = data.take(np.arange(320)), data.take(np.arange(320, 400))
        a = fit_gbt_tuned(train, val)
        b = fit_gbt_tuned(train, val)
        assert a.depth == b.depth and a.n_trees == b.n_trees
        np.testing.assert_array_equal(a.validation_curve, b.validation_curve)

    def test_additive_truth_prefers_shallow_depth(self):
        depths = []
        for seed in range(20):
            r = np.random.default_rng(seed)
            x = r.uniform(-2, 2, size=(300, 2))
            y = x[:, 0] - 0.5 * x[:, 1] + 0.3 * r.normal(size=300)
            data = Dataset(x, y)
            train, val = data.take(np.arange(240)), data.take(np.arange(240, 300))
            depths.append(fit_gbt_tuned(train, val).depth)
        assert sum(d <= 2 for d in depths) > 10

    def test_interaction_truth_needs_depth(self):
        depths = []
        for seed in range(20):
            r = np.random.default_rng(seed)
            x1 = r.uniform(-4, 4, 400)
            x2 = (r.random(400) < 0.5).astype(np.float64)
            y = -0.5 * x1 + x2 * x1 * x1 / 2.75 + x2 + r.normal(size=400)
            data = Dataset(np.column_stack([x1, x2]), y)
            train, val = data.take(np.arange(320)), data.take(np.arange(320, 400))
            depths.append(fit_gbt_tuned(train, val).depth)
        assert sum(d >= 2 for d in depths) > 10

    def test_constant_outcome_depth_one(self, rng):
        train = Dataset(rng.normal(size=(30, 2)), np.full(30, 1.0))
        val = Dataset(rng.normal(size=(10, 2)), np.full(10, 1.0))
        model = fit_gbt_tuned(train, val)
        assert model.depth == 1 and model.n_trees == 0

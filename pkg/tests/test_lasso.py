"""Coordinate-descent lasso path: KKT checks, oracle agreement, bookkeeping."""

import numpy as np
import pytest

from ltboost.errors import DataError
from ltboost.lasso import (best_by_validation, lambda_grid, lambda_max,
                           path_to_csv, predict_solution, solve_path)

from oracles import kkt_residual, lagrangian_lasso_oracle, lasso_objective


def random_problem(rng, n=20, k=5):
    x = rng.normal(size=(n, k))
    beta = rng.normal(size=k) * (rng.random(k) < 0.7)
    y = x @ beta + 0.5 * rng.normal(size=n)
    return x, y


class TestLambdaGrid:
    def test_lambda_max_kills_everything(self, rng):
        x, y = random_problem(rng)
        lam_hi = lambda_max(x, y)
        path = solve_path(x, y, lambdas=np.array([lam_hi * 1.001, lam_hi]))
        for sol in path.solutions:
            assert sol.l1_norm == 0.0
            assert not sol.coefficients.any()
            assert sol.intercept == pytest.approx(y.mean(), rel=1e-12)

    def test_first_grid_point_is_lambda_max(self, rng):
        x, y = random_problem(rng)
        path = solve_path(x, y, n_lambdas=10)
        assert path.lambdas[0] == pytest.approx(lambda_max(x, y), rel=1e-12)
        assert path.solutions[0].l1_norm == 0.0

    def test_grid_shape(self):
        grid = lambda_grid(2.0, n_lambdas=5, lambda_min_ratio=0.01)
        assert len(grid) == 5
        assert grid[0] == 2.0
        assert grid[-1] == pytest.approx(0.02, rel=1e-12)
        assert np.all(np.diff(grid) < 0)

    def test_grid_validation(self):
        with pytest.raises(DataError, match="n_lambdas"):
            lambda_grid(1.0, n_lambdas=1)
        with pytest.raises(DataError, match="lambda_min_ratio"):
            lambda_grid(1.0, lambda_min_ratio=1.5)
        with pytest.raises(DataError, match="lam_max"):
            lambda_grid(0.0)


class TestSolveAccuracy:
    def test_single_column_at_tiny_lambda_is_ols(self, rng):
        x = rng.normal(size=(40, 1))
        x = (x - x.mean()) / x.std()
        y = 2.0 * x[:, 0] + 0.1 * rng.normal(size=40)
        lam_hi = lambda_max(x, y)
        path = solve_path(x, y, lambdas=np.array([lam_hi, 1e-12]))
        xc = x[:, 0] - x[:, 0].mean()
        yc = y - y.mean()
        ols = float(xc @ yc / (xc @ xc))
        assert path.solutions[-1].coefficients[0] == pytest.approx(ols, abs=1e-8)

    def test_objective_matches_constrained_oracle(self, rng):
        for _ in range(5):
            x, y = random_problem(rng, n=20, k=5)
            lam_hi = lambda_max(x, y)
            targets = lam_hi * np.array([0.5, 0.1, 0.02])
            path = solve_path(x, y, lambdas=targets)
            for lam, sol in zip(path.lambdas, path.solutions):
                ours = lasso_objective(x, y, sol.coefficients, sol.intercept, lam)
                coef, intercept = lagrangian_lasso_oracle(x, y, float(lam))
                theirs = lasso_objective(x, y, coef, intercept, lam)
                assert ours == pytest.approx(theirs, abs=1e-6)

    def test_kkt_residuals_along_path(self, rng):
        x, y = random_problem(rng, n=30, k=6)
        path = solve_path(x, y, n_lambdas=25)
        for lam, sol in zip(path.lambdas, path.solutions):
            assert kkt_residual(x, y, sol.coefficients, float(lam)) <= 1e-8

    def test_warm_start_matches_cold_solve(self, rng):
        x, y = random_problem(rng)
        lam_hi = lambda_max(x, y)
        lam = lam_hi * 0.05
        warm = solve_path(x, y, n_lambdas=30, lambda_min_ratio=0.05)
        cold = solve_path(x, y, lambdas=np.array([lam]))
        obj_warm = lasso_objective(x, y, warm.solutions[-1].coefficients,
                                   warm.solutions[-1].intercept, lam)
        obj_cold = lasso_objective(x, y, cold.solutions[-1].coefficients,
                                   cold.solutions[-1].intercept, lam)
        assert obj_warm == pytest.approx(obj_cold, abs=10 * 1e-7)

    def test_gram_and_residual_modes_agree(self, rng):
        x, y = random_problem(rng, n=25, k=6)
        a = solve_path(x, y, n_lambdas=20, use_gram=True)
        b = solve_path(x, y, n_lambdas=20, use_gram=False)
        for sa, sb in zip(a.solutions, b.solutions):
            np.testing.assert_allclose(sa.coefficients, sb.coefficients,
                                       rtol=0, atol=1e-7)
            assert sa.train_loss == pytest.approx(sb.train_loss, abs=1e-10)


class TestPathBookkeeping:
    def test_objective_non_increasing_down_the_path(self, rng):
        x, y = random_problem(rng)
        path = solve_path(x, y, n_lambdas=30)
        objs = [lasso_objective(x, y, s.coefficients, s.intercept, float(lam))
                for lam, s in zip(path.lambdas, path.solutions)]
        # each objective is evaluated at its own lambda; shrinking lambda
        # can only shrink the optimal value
        assert all(a >= b - 1e-10 for a, b in zip(objs, objs[1:]))

    def test_l1_norm_bookkeeping_exact(self, rng):
        x, y = random_problem(rng)
        path = solve_path(x, y, n_lambdas=15)
        for sol in path.solutions:
            assert sol.l1_norm == float(np.abs(sol.coefficients).sum())

    def test_train_loss_matches_residual(self, rng):
        x, y = random_problem(rng)
        path = solve_path(x, y, n_lambdas=15)
        for sol in path.solutions:
            resid = y - predict_solution(sol, x)
            assert sol.train_loss == pytest.approx(float(np.mean(resid ** 2)),
                                                   rel=1e-9, abs=1e-12)

    def test_validation_losses_recorded(self, rng):
        x, y = random_problem(rng, n=30)
        xv, yv = x[20:], y[20:]
        path = solve_path(x[:20], y[:20], xv, yv, n_lambdas=10)
        for sol in path.solutions:
            pred = predict_solution(sol, xv)
            assert sol.validation_loss == pytest.approx(
                float(np.mean((pred - yv) ** 2)), rel=1e-9)

    def test_duplicate_columns_share_one_coefficient(self, rng):
        x, y = random_problem(rng, n=25, k=3)
        doubled = np.column_stack([x, x[:, 1]])
        path = solve_path(doubled, y, n_lambdas=10)
        for sol in path.solutions:
            # the duplicate column rides along with zero weight
            assert sol.coefficients[3] == 0.0
        base = solve_path(x, y, n_lambdas=10)
        for sa, sb in zip(base.solutions, path.solutions):
            np.testing.assert_allclose(sa.coefficients, sb.coefficients[:3],
                                       rtol=0, atol=1e-9)

    def test_zero_variance_column_gets_zero_weight(self, rng):
        x, y = random_problem(rng, n=20, k=2)
        padded = np.column_stack([x, np.full(20, 7.0)])
        path = solve_path(padded, y, n_lambdas=10)
        for sol in path.solutions:
            assert sol.coefficients[2] == 0.0

    def test_constant_outcome_intercept_only(self, rng):
        x = rng.normal(size=(15, 3))
        path = solve_path(x, np.full(15, 3.5))
        assert list(path.lambdas) == [0.0]
        sol = path.solutions[0]
        assert not sol.coefficients.any()
        assert sol.intercept == 3.5
        assert sol.train_loss == 0.0

    def test_explicit_lambdas_validated(self, rng):
        x, y = random_problem(rng)
        with pytest.raises(DataError, match="strictly decreasing"):
            solve_path(x, y, lambdas=np.array([0.1, 0.5]))
        with pytest.raises(DataError, match="strictly decreasing"):
            solve_path(x, y, lambdas=np.array([0.5, -0.1]))

    def test_shape_validation(self, rng):
        x, y = random_problem(rng)
        with pytest.raises(DataError, match="does not align"):
            solve_path(x, y[:-1])
        with pytest.raises(DataError, match="no columns"):
            solve_path(np.zeros((5, 0)), np.zeros(5))
        with pytest.raises(DataError, match="validation design has"):
            solve_path(x, y, x[:, :2], y)


class TestBestByValidation:
    def test_length_one_path(self, rng):
        x, y = random_problem(rng, n=30)
        path = solve_path(x[:20], y[:20], x[20:], y[20:],
                          lambdas=np.array([0.05]))
        idx, sol = best_by_validation(path)
        assert idx == 0 and sol is path.solutions[0]

    def test_matches_linear_scan(self, rng):
        x, y = random_problem(rng, n=40)
        path = solve_path(x[:25], y[:25], x[25:], y[25:], n_lambdas=40)
        idx, sol = best_by_validation(path)
        losses = [s.validation_loss for s in path.solutions]
        assert losses[idx] == min(losses)

    def test_tie_goes_to_larger_lambda(self, rng):
        # every lambda above lambda_max leaves all coefficients at zero, so
        # the validation losses tie exactly and the first (largest) wins
        x, y = random_problem(rng)
        lam_hi = lambda_max(x, y)
        path = solve_path(x, y, x, y,
                          lambdas=lam_hi * np.array([2.0, 1.5, 1.2]))
        losses = [s.validation_loss for s in path.solutions]
        assert losses[0] == losses[1] == losses[2]
        idx, _ = best_by_validation(path)
        assert idx == 0

    def test_refuses_without_validation(self, rng):
        x, y = random_problem(rng)
        path = solve_path(x, y, n_lambdas=5)
        with pytest.raises(DataError, match="no validation losses"):
            best_by_validation(path)


class TestCsvDump:
    def test_header_and_row_count(self, rng):
        x, y = random_problem(rng, n=30)
        path = solve_path(x[:20], y[:20], x[20:], y[20:], n_lambdas=7)
        lines = path_to_csv(path).strip().split("\n")
        assert lines[0] == "lambda,l1_norm,train_loss,validation_loss,nonzero"
        assert len(lines) == 8
        first = lines[1].split(",")
        assert float(first[0]) == pytest.approx(float(path.lambdas[0]), rel=1e-15)
        assert first[4] == "0"
        # repr round-trip: parsing the text reproduces the float exactly
        for line in lines[1:]:
            cells = line.split(",")
            assert repr(float(cells[1])) == cells[1]

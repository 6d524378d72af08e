"""Lasso-reweighted gradient tree boosting with a look-back stopping rule.

The package fits an initial boosted ensemble, then alternately re-fits the
tree weights with an L1 path and grows more trees, stopping once the path
history shows that a sparser, better solution was already available. A
step-function lasso baseline, a benchmark harness, and a synthetic
convergence-rate study ship alongside the estimator.
"""

from ._kernels import BACKEND
from .cart import Rectangle, RegressionTree, TreeNode, fit_tree, predict_tree, to_rectangles
from .dataset import Dataset, SplitSpec, load_csv, mse, rmse, split
from .errors import DataError, FitError, InfeasibleError
from .gbt import BoostedEnsemble, EarlyStopConfig, fit_gbt, fit_gbt_tuned, predict_ensemble
from .hal import HalModel, KnotLattice, StepBasis, build_lattice, fit_hal, predict_hal, rectangle_to_steps, step_design
from .lasso import DesignMatrix, LassoPath, PathSolution, best_by_validation, lambda_grid, lambda_max, solve_path
from .ltb import LedgerEntry, LtbConfig, LtbModel, build_design, check_ledger_dominance, fit_ltb, predict_ltb
from .persist import load_model, predict_model, save_model

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoostedEnsemble",
    "DataError",
    "Dataset",
    "DesignMatrix",
    "EarlyStopConfig",
    "FitError",
    "HalModel",
    "InfeasibleError",
    "KnotLattice",
    "LassoPath",
    "LedgerEntry",
    "LtbConfig",
    "LtbModel",
    "PathSolution",
    "Rectangle",
    "RegressionTree",
    "SplitSpec",
    "StepBasis",
    "TreeNode",
    "best_by_validation",
    "build_design",
    "build_lattice",
    "check_ledger_dominance",
    "fit_gbt",
    "fit_gbt_tuned",
    "fit_hal",
    "fit_ltb",
    "fit_tree",
    "lambda_grid",
    "lambda_max",
    "load_csv",
    "load_model",
    "mse",
    "predict_ensemble",
    "predict_hal",
    "predict_ltb",
    "predict_model",
    "predict_tree",
    "rectangle_to_steps",
    "rmse",
    "save_model",
    "solve_path",
    "split",
    "step_design",
    "to_rectangles",
]

"""Lassoed tree boosting: boosted trees re-weighted by a lasso path.

The loop: fit a depth-tuned boosted ensemble, build a design matrix whose
columns are per-tree predictions, solve the full lasso path over those
columns jointly, and log every path solution (lambda, L1 norm, validation
loss) in an append-only ledger. The best within-bound solution of the
current iteration is the candidate; if any earlier iteration produced a
solution with strictly smaller L1 norm and validation loss better by more
than epsilon, the run stops and returns the best such earlier solution.
Otherwise the boosting run is extended by a fixed number of trees at the
already-selected depth and the loop repeats.

The look-back comparison is strict, so it can only fire when the candidate
moves. Once the initial ensemble is near its validation optimum, freshly
added trees often never enter the selected solution and the candidate
repeats bit-for-bit forever; extending further cannot change the returned
model. A stagnation guard therefore ends the loop after the candidate has
been identical for stagnation_patience consecutive iterations and returns
that converged candidate (the same model an exhausted tree budget would
return). The guard is disabled when epsilon is infinite, which requests a
full run to max_trees.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cart import RegressionTree, predict_tree
from .dataset import Dataset
from .errors import DataError, FitError
from .gbt import (DEFAULT_LEARNING_RATE, DEFAULT_MAX_DEPTH, BoostedEnsemble,
                  EarlyStopConfig, boost_residuals, fit_gbt_tuned,
                  predict_ensemble)
from .lasso import (DEFAULT_LAMBDA_MIN_RATIO, DEFAULT_N_LAMBDAS, DEFAULT_TOL,
                    DesignMatrix, LassoPath, solve_path)

log = logging.getLogger(__name__)

DEFAULT_TREES_PER_ITERATION = 10
DEFAULT_L1_BOUND_MULTIPLIER = 10.0
DEFAULT_STAGNATION_PATIENCE = 3

STOP_LOOKBACK = "lookback"
STOP_STAGNATION = "stagnation"
STOP_MAX_TREES = "max_trees"
STOP_NO_NEW_TREES = "no_new_trees"
STOP_TRIVIAL = "trivial"


@dataclass
class LtbConfig:
    trees_per_iteration: int = DEFAULT_TREES_PER_ITERATION
    l1_upper_bound: float | None = None
    epsilon: float = 0.0
    early_stop: EarlyStopConfig = field(default_factory=EarlyStopConfig)
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_depth: int = DEFAULT_MAX_DEPTH
    min_leaf: int = 1
    n_lambdas: int = DEFAULT_N_LAMBDAS
    lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO
    tol: float = DEFAULT_TOL
    stagnation_patience: int = DEFAULT_STAGNATION_PATIENCE

    def __post_init__(self):
        if self.trees_per_iteration < 1:
            raise DataError(
                f"trees_per_iteration must be >= 1, got {self.trees_per_iteration}")
        if self.l1_upper_bound is not None and not self.l1_upper_bound > 0:
            raise DataError(
                f"l1_upper_bound must be positive, got {self.l1_upper_bound}")
        if self.epsilon < 0:
            raise DataError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.stagnation_patience < 1:
            raise DataError(
                f"stagnation_patience must be >= 1, got {self.stagnation_patience}")


@dataclass(frozen=True)
class LedgerEntry:
    iteration: int
    lam: float
    l1_norm: float
    validation_loss: float


@dataclass
class LtbModel:
    trees: list[RegressionTree]
    coefficients: np.ndarray
    intercept: float
    selected_lambda: float
    ledger: list[LedgerEntry]
    selected_iteration: int
    selected_l1_norm: float
    selected_validation_loss: float
    outer_iterations: int
    depth: int
    l1_upper_bound: float
    lookback_epsilon: float
    stop_reason: str

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_active_trees(self) -> int:
        return int(np.count_nonzero(self.coefficients))


def build_design(trees: list[RegressionTree], features) -> DesignMatrix:
    """Design whose column k is tree k's prediction vector; ids are tree indices."""
    if not trees:
        raise DataError("build_design requires a nonempty tree list")
    features = np.asarray(features, dtype=np.float64)
    cols = np.column_stack([predict_tree(tree, features) for tree in trees])
    return DesignMatrix(columns=cols, column_ids=tuple(range(len(trees))))


def predict_ltb(model: LtbModel, features) -> np.ndarray:
    """intercept + sum of coefficient-weighted tree predictions."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"features must be 2-dimensional, got shape {features.shape}")
    out = np.full(features.shape[0], model.intercept, dtype=np.float64)
    for tree, coef in zip(model.trees, model.coefficients):
        if coef != 0.0:
            out += coef * predict_tree(tree, features)
    return out


def _default_l1_bound(ensemble: BoostedEnsemble) -> float:
    """Multiple of the L1 mass of the ensemble's implied tree weights."""
    leaf_scale = sum(float(np.max(np.abs(tree.leaf_values()))) for tree in ensemble.trees)
    return DEFAULT_L1_BOUND_MULTIPLIER * ensemble.learning_rate * leaf_scale


def _trivial_model(ensemble: BoostedEnsemble, bound: float,
                   config: LtbConfig) -> LtbModel:
    return LtbModel(
        trees=[], coefficients=np.zeros(0, dtype=np.float64),
        intercept=ensemble.base_prediction, selected_lambda=0.0, ledger=[],
        selected_iteration=0, selected_l1_norm=0.0,
        selected_validation_loss=ensemble.base_validation_loss,
        outer_iterations=0, depth=ensemble.depth, l1_upper_bound=bound,
        lookback_epsilon=config.epsilon, stop_reason=STOP_TRIVIAL)


def fit_ltb(train: Dataset, validation: Dataset,
            config: LtbConfig | None = None) -> LtbModel:
    """Run the full boost / lasso-reweight / look-back loop."""
    config = config or LtbConfig()
    ensemble = fit_gbt_tuned(train, validation, config.early_stop,
                             config.learning_rate, config.min_leaf,
                             config.max_depth)
    if not ensemble.trees:
        if float(np.ptp(train.outcome)) == 0.0:
            bound = config.l1_upper_bound if config.l1_upper_bound is not None else 1.0
            return _trivial_model(ensemble, bound, config)
        raise FitError("initial boosting produced no trees on a non-constant outcome")

    bound = config.l1_upper_bound
    if bound is None:
        bound = _default_l1_bound(ensemble)

    trees = list(ensemble.trees)
    pred_train = predict_ensemble(ensemble, train.features)
    train_cols = [predict_tree(t, train.features) for t in trees]
    val_cols = [predict_tree(t, validation.features) for t in trees]

    max_trees = config.early_stop.max_trees
    paths: list[LassoPath] = []
    trees_at: list[int] = []
    ledger: list[LedgerEntry] = []
    entry_pos: list[tuple[int, int]] = []
    iters: list[int] = []
    l1s: list[float] = []
    vals: list[float] = []

    def materialize(iteration: int, path_idx: int, reason: str) -> LtbModel:
        sol = paths[iteration].solutions[path_idx]
        k = trees_at[iteration]
        return LtbModel(
            trees=trees[:k],
            coefficients=np.array(sol.coefficients, dtype=np.float64),
            intercept=sol.intercept,
            selected_lambda=float(paths[iteration].lambdas[path_idx]),
            ledger=ledger,
            selected_iteration=iteration,
            selected_l1_norm=sol.l1_norm,
            selected_validation_loss=sol.validation_loss,
            outer_iterations=len(paths),
            depth=ensemble.depth,
            l1_upper_bound=bound,
            lookback_epsilon=config.epsilon,
            stop_reason=reason)

    stagnation_on = math.isfinite(config.epsilon)
    prev_candidate = None
    stagnant_streak = 0
    iteration = 0
    while True:
        design = DesignMatrix(np.column_stack(train_cols),
                              column_ids=tuple(range(len(trees))))
        val_design = DesignMatrix(np.column_stack(val_cols),
                                  column_ids=design.column_ids)
        path = solve_path(design, train.outcome, val_design, validation.outcome,
                          n_lambdas=config.n_lambdas,
                          lambda_min_ratio=config.lambda_min_ratio,
                          tol=config.tol)
        paths.append(path)
        trees_at.append(len(trees))
        for idx, sol in enumerate(path.solutions):
            ledger.append(LedgerEntry(iteration=iteration,
                                      lam=float(path.lambdas[idx]),
                                      l1_norm=sol.l1_norm,
                                      validation_loss=sol.validation_loss))
            entry_pos.append((iteration, idx))
            iters.append(iteration)
            l1s.append(sol.l1_norm)
            vals.append(sol.validation_loss)

        path_l1 = np.array([s.l1_norm for s in path.solutions])
        path_val = np.array([s.validation_loss for s in path.solutions])
        within = np.flatnonzero(path_l1 <= bound)
        cand_idx = int(within[np.argmin(path_val[within])])
        cand = path.solutions[cand_idx]
        log.debug("iteration %d: %d trees, candidate l1=%.4g val=%.6g",
                  iteration, len(trees), cand.l1_norm, cand.validation_loss)

        if iteration > 0:
            arr_iters = np.array(iters)
            arr_l1 = np.array(l1s)
            arr_val = np.array(vals)
            earlier_smaller = (arr_iters < iteration) & (arr_l1 < cand.l1_norm)
            beaten = earlier_smaller & (arr_val + config.epsilon < cand.validation_loss)
            if bool(np.any(beaten)):
                eligible = np.flatnonzero(earlier_smaller)
                winner = int(eligible[np.argmin(arr_val[eligible])])
                return materialize(*entry_pos[winner], reason=STOP_LOOKBACK)

        if stagnation_on:
            here = (cand.l1_norm, cand.validation_loss)
            if here == prev_candidate:
                stagnant_streak += 1
                if stagnant_streak >= config.stagnation_patience:
                    return materialize(iteration, cand_idx, reason=STOP_STAGNATION)
            else:
                stagnant_streak = 0
            prev_candidate = here

        if len(trees) >= max_trees:
            return materialize(iteration, cand_idx, reason=STOP_MAX_TREES)
        budget = min(config.trees_per_iteration, max_trees - len(trees))
        before = len(trees)
        added = boost_residuals(trees, train, pred_train, budget,
                                ensemble.depth, config.learning_rate,
                                config.min_leaf)
        if added == 0:
            return materialize(iteration, cand_idx, reason=STOP_NO_NEW_TREES)
        for t in trees[before:]:
            train_cols.append(predict_tree(t, train.features))
            val_cols.append(predict_tree(t, validation.features))
        iteration += 1


def check_ledger_dominance(model: LtbModel, epsilon: float | None = None) -> bool:
    """True iff no earlier, strictly smaller-L1 ledger entry beats the returned
    solution's validation loss by more than epsilon."""
    eps = model.lookback_epsilon if epsilon is None else epsilon
    for entry in model.ledger:
        if (entry.iteration < model.selected_iteration
                and entry.l1_norm < model.selected_l1_norm
                and entry.validation_loss + eps < model.selected_validation_loss):
            return False
    return True


def ledger_to_csv(model: LtbModel) -> str:
    """One row per ledger entry: iteration, lambda, l1_norm, validation_loss."""
    buf = io.StringIO()
    buf.write("iteration,lambda,l1_norm,validation_loss\n")
    for e in model.ledger:
        buf.write(f"{e.iteration},{e.lam!r},{e.l1_norm!r},{e.validation_loss!r}\n")
    return buf.getvalue()

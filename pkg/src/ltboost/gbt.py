"""Squared-error gradient boosting with patience-based early stopping.

Trees are fit sequentially to residuals y - f(x). After each tree the
validation loss is compared to the best seen so far; fitting stops once the
excess exceeds epsilon on `patience` consecutive iterations (or at
max_trees) and the ensemble is truncated back to its best iteration. An
outer loop tunes tree depth by the same validate-and-stop idea.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cart import RegressionTree, fit_tree_with_predictions, predict_tree
from .dataset import Dataset, mse
from .errors import DataError, FitError

log = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 0.05
DEFAULT_MAX_DEPTH = 12


@dataclass
class EarlyStopConfig:
    patience: int = 3
    epsilon: float = 0.0
    max_trees: int = 10_000

    def __post_init__(self):
        if self.patience < 1:
            raise DataError(f"patience must be >= 1, got {self.patience}")
        if self.epsilon < 0:
            raise DataError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_trees < 1:
            raise DataError(f"max_trees must be >= 1, got {self.max_trees}")


@dataclass
class BoostedEnsemble:
    trees: list[RegressionTree] = field(default_factory=list)
    learning_rate: float = DEFAULT_LEARNING_RATE
    base_prediction: float = 0.0
    validation_curve: list[float] = field(default_factory=list)
    base_validation_loss: float = float("nan")
    depth: int = 1

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def best_validation_loss(self) -> float:
        # Curves are truncated at their argmin, so the last entry is the best.
        return self.validation_curve[-1] if self.validation_curve else self.base_validation_loss


def predict_ensemble(model: BoostedEnsemble, features) -> np.ndarray:
    """base_prediction + learning_rate * sum of tree predictions."""
    features = np.asarray(features, dtype=np.float64)
    out = np.full(features.shape[0], model.base_prediction, dtype=np.float64)
    if not model.trees:
        return out
    acc = np.zeros(features.shape[0], dtype=np.float64)
    for tree in model.trees:
        acc += predict_tree(tree, features)
    return out + model.learning_rate * acc


def boost_residuals(trees: list[RegressionTree], train: Dataset, pred_train: np.ndarray,
                    n_new: int, depth: int, learning_rate: float,
                    min_leaf: int = 1) -> int:
    """Continue the shrunken-residual recursion, appending up to n_new trees.

    Mutates `trees` and `pred_train` in place and returns how many trees were
    actually added. Stops early if a fitted tree predicts identically zero on
    the training rows: from that point the residuals are stationary, so every
    later tree would be the same zero tree and no loss can change.
    """
    added = 0
    for _ in range(n_new):
        residual = train.outcome - pred_train
        tree, fitted = fit_tree_with_predictions(train.features, residual, depth, min_leaf)
        if not np.any(fitted):
            break
        trees.append(tree)
        pred_train += learning_rate * fitted
        added += 1
    return added


def fit_gbt(train: Dataset, validation: Dataset, depth: int,
            config: EarlyStopConfig | None = None,
            learning_rate: float = DEFAULT_LEARNING_RATE,
            min_leaf: int = 1) -> BoostedEnsemble:
    """Boost depth-limited trees on residuals until validation loss stalls."""
    if train.n < 1 or validation.n < 1:
        raise FitError("train and validation sets must be nonempty")
    if depth < 1:
        raise DataError(f"depth must be >= 1, got {depth}")
    if not (0.0 < learning_rate <= 1.0):
        raise DataError(f"learning_rate must be in (0, 1], got {learning_rate}")
    config = config or EarlyStopConfig()

    base = float(np.mean(train.outcome))
    pred_train = np.full(train.n, base, dtype=np.float64)
    pred_val = np.full(validation.n, base, dtype=np.float64)
    base_val_loss = mse(pred_val, validation.outcome)

    trees: list[RegressionTree] = []
    curve: list[float] = []
    best_loss = base_val_loss
    best_k = 0
    bad_streak = 0

    while len(trees) < config.max_trees:
        residual = train.outcome - pred_train
        tree, fitted = fit_tree_with_predictions(train.features, residual, depth, min_leaf)
        if not np.any(fitted):
            # Residuals are stationary; later iterations would repeat this
            # zero tree forever and the validation curve would never move.
            break
        trees.append(tree)
        pred_train += learning_rate * fitted
        pred_val += learning_rate * predict_tree(tree, validation.features)
        val_loss = mse(pred_val, validation.outcome)
        curve.append(val_loss)

        if val_loss < best_loss:
            best_loss = val_loss
            best_k = len(trees)
            bad_streak = 0
        elif val_loss - best_loss > config.epsilon:
            bad_streak += 1
            if bad_streak >= config.patience:
                break
        else:
            bad_streak = 0

    return BoostedEnsemble(
        trees=trees[:best_k],
        learning_rate=learning_rate,
        base_prediction=base,
        validation_curve=curve[:best_k],
        base_validation_loss=base_val_loss,
        depth=depth,
    )


def fit_gbt_tuned(train: Dataset, validation: Dataset,
                  config: EarlyStopConfig | None = None,
                  learning_rate: float = DEFAULT_LEARNING_RATE,
                  min_leaf: int = 1,
                  max_depth: int = DEFAULT_MAX_DEPTH) -> BoostedEnsemble:
    """Tune depth 1, 2, 3, ... and stop at the first validation increase.

    Returns the previous depth's ensemble when depth d's best validation
    loss exceeds depth d-1's. If no increase occurs by max_depth (possible
    when losses tie forever, e.g. a constant outcome), returns the best
    ensemble fitted, preferring shallower depth on ties.
    """
    config = config or EarlyStopConfig()
    prev: BoostedEnsemble | None = None
    best: BoostedEnsemble | None = None
    for depth in range(1, max_depth + 1):
        ens = fit_gbt(train, validation, depth, config, learning_rate, min_leaf)
        log.debug("depth %d: %d trees, best validation loss %.6g",
                  depth, ens.n_trees, ens.best_validation_loss)
        if prev is not None and ens.best_validation_loss > prev.best_validation_loss:
            return prev
        if best is None or ens.best_validation_loss < best.best_validation_loss:
            best = ens
        prev = ens
    return best

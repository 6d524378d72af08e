"""Step-function lasso baseline on the minimal knot lattice.

The knot set is the smallest lattice containing every observed row: the
Cartesian product of each feature's sorted unique values. Each knot c
yields the basis 1(c <= x), with the inequality componentwise. A lasso
over all such columns is the small-scale reference estimator here, and the
rectangle-to-steps decomposition connects tree leaf cells to this basis.
The lattice size is n^p in the worst case, so a hard column cap keeps this
module at desk scale.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .cart import Rectangle
from .dataset import Dataset
from .errors import DataError, InfeasibleError
from .lasso import (DEFAULT_LAMBDA_MIN_RATIO, DEFAULT_N_LAMBDAS, DEFAULT_TOL,
                    DesignMatrix, best_by_validation, solve_path)

log = logging.getLogger(__name__)

DEFAULT_LATTICE_CAP = 200_000


@dataclass(frozen=True)
class KnotLattice:
    """Per-feature sorted unique values; the knot set is their product."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(np.asarray(lv, dtype=np.float64) for lv in self.levels)
        if not levels:
            raise DataError("lattice needs at least one feature")
        for j, lv in enumerate(levels):
            if lv.ndim != 1 or lv.size == 0:
                raise DataError(f"feature {j} has no lattice levels")
            if np.any(np.diff(lv) <= 0):
                raise DataError(f"feature {j} levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)

    @property
    def p(self) -> int:
        return len(self.levels)

    @property
    def size(self) -> int:
        return math.prod(len(lv) for lv in self.levels)

    def knots(self):
        """Yield knots as tuples in lexicographic order (feature 0 slowest)."""
        return itertools.product(*(map(float, lv) for lv in self.levels))

    def knot_array(self) -> np.ndarray:
        """All knots as a (size, p) array in lexicographic order."""
        return np.array(list(self.knots()), dtype=np.float64).reshape(self.size, self.p)


@dataclass(frozen=True)
class StepBasis:
    """The indicator 1(knot <= x), componentwise in every dimension."""

    knot: np.ndarray

    def __post_init__(self):
        knot = np.asarray(self.knot, dtype=np.float64)
        if knot.ndim != 1 or knot.size == 0:
            raise DataError(f"knot must be a nonempty vector, got shape {knot.shape}")
        knot = knot.copy()
        knot.setflags(write=False)
        object.__setattr__(self, "knot", knot)

    def evaluate(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.knot.shape[0]:
            raise DataError(
                f"features shape {features.shape} does not match knot length {self.knot.shape[0]}")
        return np.all(features >= self.knot, axis=1).astype(np.float64)


@dataclass
class HalModel:
    bases: list
    intercept: float
    variation_norm: float
    selected_lambda: float

    @property
    def n_bases(self) -> int:
        return len(self.bases)


def build_lattice(features, cap: int = DEFAULT_LATTICE_CAP) -> KnotLattice:
    """Smallest lattice containing every observed row, or error beyond cap."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        raise DataError(f"features must be a nonempty 2-D matrix, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise DataError("features contain non-finite values")
    levels = tuple(np.unique(features[:, j]) for j in range(features.shape[1]))
    size = math.prod(len(lv) for lv in levels)
    if size > cap:
        raise InfeasibleError(
            f"knot lattice has {size} knots, above the cap of {cap}",
            size=size, cap=cap)
    return KnotLattice(levels)


def step_design(lattice: KnotLattice, features,
                cap: int = DEFAULT_LATTICE_CAP) -> DesignMatrix:
    """m x |lattice| binary design; column c is 1(c <= x) per row.

    Columns follow the lattice's lexicographic knot order and are id'd by
    flat knot index.
    """
    if lattice.size > cap:
        raise InfeasibleError(
            f"knot lattice has {lattice.size} knots, above the cap of {cap}",
            size=lattice.size, cap=cap)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != lattice.p:
        raise DataError(
            f"features shape {features.shape} does not match lattice p={lattice.p}")
    m = features.shape[0]
    design = np.ones((m, 1), dtype=np.float64)
    for j, lv in enumerate(lattice.levels):
        ind = (features[:, j][:, None] >= lv[None, :]).astype(np.float64)
        design = (design[:, :, None] * ind[:, None, :]).reshape(m, -1)
    return DesignMatrix(columns=design, column_ids=tuple(range(lattice.size)))


def fit_hal(train: Dataset, validation: Dataset,
            n_lambdas: int = DEFAULT_N_LAMBDAS,
            lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
            tol: float = DEFAULT_TOL,
            cap: int = DEFAULT_LATTICE_CAP) -> HalModel:
    """Lasso over the full step basis, selected by validation loss."""
    lattice = build_lattice(train.features, cap)
    log.debug("lattice size %d over %d features", lattice.size, lattice.p)
    design = step_design(lattice, train.features, cap)
    val_design = step_design(lattice, validation.features, cap)
    path = solve_path(design, train.outcome, val_design, validation.outcome,
                      n_lambdas=n_lambdas, lambda_min_ratio=lambda_min_ratio,
                      tol=tol)
    idx, sol = best_by_validation(path)
    knots = lattice.knot_array()
    active = np.flatnonzero(sol.coefficients)
    bases = [(StepBasis(knots[i]), float(sol.coefficients[i])) for i in active]
    return HalModel(bases=bases, intercept=sol.intercept,
                    variation_norm=sol.l1_norm,
                    selected_lambda=float(path.lambdas[idx]))


def predict_hal(model: HalModel, features) -> np.ndarray:
    """intercept + sum of coefficient-weighted step indicators."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"features must be 2-dimensional, got shape {features.shape}")
    out = np.full(features.shape[0], model.intercept, dtype=np.float64)
    for basis, coef in model.bases:
        out += coef * basis.evaluate(features)
    return out


def rectangle_to_steps(rect: Rectangle) -> list:
    """Signed steps whose sum reproduces 1(lower <= x < upper) pointwise.

    Corners pick either bound per dimension; a corner's sign is
    (-1)**(number of dimensions where it picks the upper bound). Dimensions
    with an infinite upper bound contribute no upper-corner terms (their
    step vanishes identically), and -inf lower coordinates stay in the knot,
    where 1(-inf <= x) is identically one. At most 2**p terms.
    """
    lower = np.asarray(rect.lower, dtype=np.float64)
    upper = np.asarray(rect.upper, dtype=np.float64)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise DataError("rectangle bounds must be equal-length vectors")
    if np.any(lower >= upper):
        j = int(np.argmax(lower >= upper))
        raise DataError(
            f"degenerate rectangle in dimension {j}: [{lower[j]}, {upper[j]})")
    choices = []
    for j in range(lower.shape[0]):
        opts = [(lower[j], 0)]
        if np.isfinite(upper[j]):
            opts.append((upper[j], 1))
        choices.append(opts)
    out = []
    for combo in itertools.product(*choices):
        knot = np.array([c for c, _ in combo], dtype=np.float64)
        upper_picks = sum(tag for _, tag in combo)
        out.append((StepBasis(knot), -1 if upper_picks % 2 else 1))
    return out

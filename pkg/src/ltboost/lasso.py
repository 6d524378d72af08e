"""L1-penalized least squares solved along a regularization path.

Minimizes (1/2n)*sum((y - b0 - X@beta)^2) + lam*sum(|beta|) by cyclic
coordinate descent with soft-thresholding, warm-started down a log-spaced
lambda grid. Columns are centered but never variance-scaled, so the
penalty applies to coefficients of the raw columns and the recorded L1
norms are comparable across solves. The intercept is unpenalized and
recovered from the centering. Every returned solution is checked against
the KKT conditions on a freshly computed residual and re-swept at tighter
tolerance until they hold.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import DataError, FitError

log = logging.getLogger(__name__)

DEFAULT_N_LAMBDAS = 100
DEFAULT_LAMBDA_MIN_RATIO = 1e-3
DEFAULT_TOL = 1e-7
MAX_SWEEPS = 100_000
_MAX_KKT_ROUNDS = 30
# above this many distinct columns the gram matrix is not worth building
_GRAM_MAX_COLUMNS = 4096


@dataclass(frozen=True)
class DesignMatrix:
    """Column-per-basis design with stable column identifiers."""

    columns: np.ndarray
    column_ids: tuple = None

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.float64)
        if cols.ndim != 2:
            raise DataError(f"design must be 2-dimensional, got shape {cols.shape}")
        if not np.isfinite(cols).all():
            raise DataError("design contains non-finite values")
        object.__setattr__(self, "columns", cols)
        ids = self.column_ids
        if ids is None:
            ids = tuple(range(cols.shape[1]))
        else:
            ids = tuple(ids)
            if len(ids) != cols.shape[1]:
                raise DataError(
                    f"{len(ids)} column_ids for {cols.shape[1]} columns")
        object.__setattr__(self, "column_ids", ids)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]


@dataclass(frozen=True)
class PathSolution:
    coefficients: np.ndarray
    intercept: float
    l1_norm: float
    train_loss: float
    validation_loss: float


@dataclass(frozen=True)
class LassoPath:
    lambdas: np.ndarray
    solutions: tuple
    column_ids: tuple

    def __len__(self) -> int:
        return len(self.solutions)


def _as_columns(design) -> tuple[np.ndarray, tuple]:
    if isinstance(design, DesignMatrix):
        return design.columns, design.column_ids
    design = DesignMatrix(design)
    return design.columns, design.column_ids


def lambda_max(columns: np.ndarray, outcome: np.ndarray) -> float:
    """Smallest penalty at which every coefficient is zero.

    Equals max_j |(1/n) <column_j - mean_j, outcome - mean(outcome)>|.
    """
    columns = np.asarray(columns, dtype=np.float64)
    outcome = np.asarray(outcome, dtype=np.float64)
    n = columns.shape[0]
    yc = outcome - outcome.mean()
    inner = yc @ (columns - columns.mean(axis=0))
    return float(np.max(np.abs(inner)) / n) if inner.size else 0.0


def lambda_grid(lam_max: float, n_lambdas: int = DEFAULT_N_LAMBDAS,
                lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO) -> np.ndarray:
    """Log-spaced descending grid from lam_max to lam_max*lambda_min_ratio."""
    if n_lambdas < 2:
        raise DataError(f"n_lambdas must be >= 2, got {n_lambdas}")
    if not (0.0 < lambda_min_ratio < 1.0):
        raise DataError(f"lambda_min_ratio must be in (0, 1), got {lambda_min_ratio}")
    if lam_max <= 0:
        raise DataError(f"lam_max must be positive, got {lam_max}")
    exponents = np.arange(n_lambdas, dtype=np.float64) / (n_lambdas - 1)
    return lam_max * lambda_min_ratio ** exponents


def _dedup_columns(xc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group bitwise-identical columns; representative = first occurrence.

    Returns (reps, rep_of): ascending original indices of representatives,
    and for each column the original index of its representative.
    """
    k = xc.shape[1]
    rep_of = np.empty(k, dtype=np.intp)
    seen: dict[bytes, int] = {}
    for j in range(k):
        key = np.ascontiguousarray(xc[:, j]).tobytes()
        rep_of[j] = seen.setdefault(key, j)
    reps = np.array(sorted(seen.values()), dtype=np.intp)
    return reps, rep_of


def _kkt_violation(grad: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Max stationarity violation given grad_j = (1/n) <x_j, y - X@beta>."""
    active = beta != 0.0
    worst = 0.0
    if np.any(~active):
        worst = float(np.max(np.abs(grad[~active])) - lam)
    if np.any(active):
        worst = max(worst, float(np.max(np.abs(grad[active] - lam * np.sign(beta[active])))))
    return max(worst, 0.0)


def _solve_at_lambda(xr: np.ndarray, yc: np.ndarray, resid: np.ndarray,
                     beta: np.ndarray, col_nsq: np.ndarray, lam: float,
                     conv_tol: float, kkt_tol: float) -> float:
    """Converge beta at one lambda; resid is kept equal to yc - xr@beta.

    Runs one full sweep to admit new active coordinates, converges on the
    active subset, then verifies KKT on a freshly recomputed residual,
    tightening the sweep tolerance until the check passes.
    """
    n = xr.shape[0]
    tol_now = conv_tol
    viol = np.inf
    for _ in range(_MAX_KKT_ROUNDS):
        kernels.cd_sweeps(xr, resid, beta, col_nsq, lam, 0.0, 1)
        active = np.flatnonzero(beta)
        if active.size:
            xa = np.asfortranarray(xr[:, active])
            beta_a = np.ascontiguousarray(beta[active])
            nsq_a = np.ascontiguousarray(col_nsq[active])
            kernels.cd_sweeps(xa, resid, beta_a, nsq_a, lam, tol_now, MAX_SWEEPS)
            beta[active] = beta_a
            fresh = yc - xr[:, active] @ beta[active]
        else:
            fresh = yc.copy()
        resid[:] = fresh
        viol = _kkt_violation((fresh @ xr) / n, beta, lam)
        if viol <= kkt_tol:
            return viol
        tol_now = max(tol_now * 0.01, 1e-16)
    log.warning("KKT residual %.3g above tolerance %.3g at lambda=%.6g",
                viol, kkt_tol, lam)
    return viol


def _solve_at_lambda_gram(g: np.ndarray, xty_n: np.ndarray, c: np.ndarray,
                          beta: np.ndarray, col_nsq: np.ndarray, lam: float,
                          conv_tol: float, kkt_tol: float) -> float:
    """Gram-form twin of _solve_at_lambda; c is kept equal to xty_n - g@beta.

    Same admit/converge/verify structure, but sweeps only touch the gram
    matrix, so their cost is independent of the row count.
    """
    tol_now = conv_tol
    viol = np.inf
    for _ in range(_MAX_KKT_ROUNDS):
        kernels.cd_sweeps_gram(g, c, beta, col_nsq, lam, 0.0, 1)
        active = np.flatnonzero(beta)
        if active.size:
            ga = np.ascontiguousarray(g[np.ix_(active, active)])
            ca = np.ascontiguousarray(c[active])
            beta_a = np.ascontiguousarray(beta[active])
            nsq_a = np.ascontiguousarray(col_nsq[active])
            kernels.cd_sweeps_gram(ga, ca, beta_a, nsq_a, lam, tol_now, MAX_SWEEPS)
            beta[active] = beta_a
            fresh = xty_n - g[:, active] @ beta[active]
        else:
            fresh = xty_n.copy()
        c[:] = fresh
        viol = _kkt_violation(fresh, beta, lam)
        if viol <= kkt_tol:
            return viol
        tol_now = max(tol_now * 0.01, 1e-16)
    log.warning("KKT residual %.3g above tolerance %.3g at lambda=%.6g",
                viol, kkt_tol, lam)
    return viol


def _intercept_only_path(lambdas: np.ndarray, k: int, ybar: float, yc: np.ndarray,
                         val_cols, val_out, column_ids: tuple) -> LassoPath:
    train_loss = float(np.mean(yc * yc))
    if val_cols is not None:
        val_loss = float(np.mean((val_out - ybar) ** 2))
    else:
        val_loss = float("nan")
    zero = np.zeros(k, dtype=np.float64)
    zero.setflags(write=False)
    sols = tuple(
        PathSolution(coefficients=zero, intercept=ybar, l1_norm=0.0,
                     train_loss=train_loss, validation_loss=val_loss)
        for _ in lambdas)
    return LassoPath(lambdas=lambdas, solutions=sols, column_ids=column_ids)


def solve_path(design, outcome, validation_design=None, validation_outcome=None,
               n_lambdas: int = DEFAULT_N_LAMBDAS,
               lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
               tol: float = DEFAULT_TOL,
               lambdas=None, use_gram: bool | None = None) -> LassoPath:
    """Solve the lasso at every grid point, warm-starting down the path.

    The grid runs from lambda_max (all-zero solution) down to
    lambda_max*lambda_min_ratio over n_lambdas log-spaced values; passing
    `lambdas` (strictly decreasing, nonnegative) overrides it. Convergence
    per sweep is max coefficient change < tol*std(outcome). A zero-variance
    outcome short-circuits to an intercept-only path. Per-solution train
    and validation losses are recorded (validation optional, NaN when
    absent). use_gram picks the sweep form: precomputed gram matrix
    (row-count-free sweeps) or residual updates (no K*K memory); None
    decides by distinct-column count.
    """
    x, column_ids = _as_columns(design)
    y = np.asarray(outcome, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise DataError(
            f"outcome shape {y.shape} does not align with design rows {x.shape[0]}")
    if not np.isfinite(y).all():
        raise DataError("outcome contains non-finite values")
    if x.shape[1] == 0:
        raise DataError("design has no columns")
    if tol <= 0:
        raise DataError(f"tol must be positive, got {tol}")

    val_cols = None
    val_out = None
    if validation_design is not None:
        val_cols, _ = _as_columns(validation_design)
        if validation_outcome is None:
            raise DataError("validation_design given without validation_outcome")
        val_out = np.asarray(validation_outcome, dtype=np.float64)
        if val_cols.shape[1] != x.shape[1]:
            raise DataError(
                f"validation design has {val_cols.shape[1]} columns, expected {x.shape[1]}")
        if val_out.ndim != 1 or val_out.shape[0] != val_cols.shape[0]:
            raise DataError("validation outcome does not align with validation design")
        if not np.isfinite(val_out).all():
            raise DataError("validation outcome contains non-finite values")

    n, k = x.shape
    ybar = float(y.mean())
    yc = y - ybar

    if lambdas is not None:
        lam_arr = np.asarray(lambdas, dtype=np.float64)
        if lam_arr.ndim != 1 or lam_arr.size == 0:
            raise DataError("lambdas must be a nonempty 1-D sequence")
        if np.any(lam_arr < 0) or np.any(np.diff(lam_arr) >= 0):
            raise DataError("lambdas must be strictly decreasing and nonnegative")
    else:
        lam_arr = None

    ystd = float(yc.std())
    if ystd == 0.0:
        grid = lam_arr if lam_arr is not None else np.array([0.0])
        return _intercept_only_path(grid, k, ybar, yc, val_cols, val_out, column_ids)

    col_mean = x.mean(axis=0)
    xc = x - col_mean
    xc[:, np.ptp(x, axis=0) == 0.0] = 0.0

    reps, rep_of = _dedup_columns(xc)
    xr = np.asfortranarray(xc[:, reps])
    col_nsq = np.ascontiguousarray((xr * xr).sum(axis=0) / n)

    xty_n = np.ascontiguousarray(yc @ xr) / n
    lam_hi = float(np.max(np.abs(xty_n)))
    if lam_arr is None:
        if lam_hi <= 0.0:
            grid = np.array([0.0])
            return _intercept_only_path(grid, k, ybar, yc, val_cols, val_out, column_ids)
        lam_arr = lambda_grid(lam_hi, n_lambdas, lambda_min_ratio)

    conv_tol = tol * ystd
    kkt_tol = 1e-9 * max(1.0, lam_hi)
    if use_gram is None:
        use_gram = reps.size <= _GRAM_MAX_COLUMNS
    if use_gram:
        gram = np.ascontiguousarray(xr.T @ xr) / n
        c = xty_n.copy()

    beta = np.zeros(reps.size, dtype=np.float64)
    resid = yc.copy()
    coefs = np.zeros((lam_arr.size, k), dtype=np.float64)
    intercepts = np.empty(lam_arr.size, dtype=np.float64)
    l1_norms = np.empty(lam_arr.size, dtype=np.float64)
    train_losses = np.empty(lam_arr.size, dtype=np.float64)

    for i, lam in enumerate(lam_arr):
        if use_gram:
            _solve_at_lambda_gram(gram, xty_n, c, beta, col_nsq, float(lam),
                                  conv_tol, kkt_tol)
            active = np.flatnonzero(beta)
            resid = yc - xr[:, active] @ beta[active] if active.size else yc
        else:
            _solve_at_lambda(xr, yc, resid, beta, col_nsq, float(lam),
                             conv_tol, kkt_tol)
        coefs[i, reps] = beta
        l1_norms[i] = float(np.abs(beta).sum())
        intercepts[i] = ybar - float(coefs[i] @ col_mean)
        train_losses[i] = float(np.mean(resid * resid))

    if val_cols is not None:
        val_pred = val_cols @ coefs.T + intercepts
        diffs = val_pred - val_out[:, None]
        val_losses = np.mean(diffs * diffs, axis=0)
    else:
        val_losses = np.full(lam_arr.size, np.nan)

    solutions = []
    for i in range(lam_arr.size):
        row = coefs[i]
        row.setflags(write=False)
        solutions.append(PathSolution(
            coefficients=row,
            intercept=float(intercepts[i]),
            l1_norm=float(l1_norms[i]),
            train_loss=float(train_losses[i]),
            validation_loss=float(val_losses[i]),
        ))
    return LassoPath(lambdas=lam_arr, solutions=tuple(solutions), column_ids=column_ids)


def best_by_validation(path: LassoPath) -> tuple[int, PathSolution]:
    """Index and record of the minimal validation loss; ties go to larger lambda."""
    if len(path) == 0:
        raise DataError("empty path")
    losses = np.array([s.validation_loss for s in path.solutions])
    if np.isnan(losses).any():
        raise DataError("path has no validation losses to select by")
    idx = int(np.argmin(losses))
    return idx, path.solutions[idx]


def predict_solution(solution: PathSolution, design) -> np.ndarray:
    """intercept + columns @ coefficients for one path solution."""
    cols, _ = _as_columns(design)
    if cols.shape[1] != solution.coefficients.shape[0]:
        raise DataError(
            f"design has {cols.shape[1]} columns, model has {solution.coefficients.shape[0]}")
    return cols @ solution.coefficients + solution.intercept


def path_to_csv(path: LassoPath) -> str:
    """One row per lambda: lambda, l1_norm, train_loss, validation_loss, nonzero."""
    buf = io.StringIO()
    buf.write("lambda,l1_norm,train_loss,validation_loss,nonzero\n")
    for lam, sol in zip(path.lambdas, path.solutions):
        nonzero = int(np.count_nonzero(sol.coefficients))
        buf.write(f"{float(lam)!r},{sol.l1_norm!r},{sol.train_loss!r},"
                  f"{sol.validation_loss!r},{nonzero}\n")
    return buf.getvalue()

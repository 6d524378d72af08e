"""Seeded experiment harnesses: convergence-rate simulation and CSV benchmark.

The rate study draws synthetic samples of increasing size, fits each
requested estimator on a train/validation split, and scores the squared L2
error against the known noiseless mean on one large shared holdout sample.
Per-estimator log-log slopes summarize how the error decays with n. The
benchmark harness runs repeated splits of user-supplied CSV datasets and
reports mean test RMSE and mean fit seconds per (dataset, estimator) cell.

Every cell derives its own seed from (base seed, cell coordinates), so
results are independent of execution order and of the number of worker
processes, and identical seeds reproduce every non-timing output exactly.
"""

from __future__ import annotations

import concurrent.futures
import io
import logging
import os
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, SplitSpec, load_csv, rmse, split
from .errors import DataError, FitError, InfeasibleError
from .gbt import fit_gbt_tuned, predict_ensemble
from .hal import DEFAULT_LATTICE_CAP, fit_hal, predict_hal
from .lasso import DesignMatrix, best_by_validation, predict_solution, solve_path
from .ltb import check_ledger_dominance, fit_ltb, predict_ltb
from .persist import atomic_write_text

log = logging.getLogger(__name__)

RATE_ESTIMATORS = ("gbt", "hal", "ltb", "mean")
BENCH_ESTIMATORS = ("gbt", "hal", "lasso", "ltb", "mean")
DEFAULT_RATE_NS = (250, 500, 1000, 2000, 4000)
DEFAULT_RATE_REPS = 20
DEFAULT_HOLDOUT_N = 20_000
DEFAULT_BENCH_REPS = 10

_TAG_SAMPLE = 1
_TAG_SPLIT = 2
_TAG_HOLDOUT = 3


@dataclass(frozen=True)
class DgpSample:
    """One draw of the two-feature synthetic generator."""

    features: np.ndarray
    outcome: np.ndarray
    seed: object

    @property
    def n(self) -> int:
        return self.features.shape[0]


def dgp_mean(features) -> np.ndarray:
    """Noiseless conditional mean -0.5*x1 + x2*x1^2/2.75 + x2."""
    features = np.asarray(features, dtype=np.float64)
    x1 = features[:, 0]
    x2 = features[:, 1]
    return -0.5 * x1 + x2 * x1 * x1 / 2.75 + x2


def generate_dgp(n: int, seed) -> DgpSample:
    """Draw n rows: X1 ~ Unif(-4, 4), X2 ~ Bernoulli(1/2), Y = mean + N(0,1)."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(-4.0, 4.0, n)
    x2 = (rng.random(n) < 0.5).astype(np.float64)
    features = np.column_stack([x1, x2])
    outcome = dgp_mean(features) + rng.standard_normal(n)
    return DgpSample(features=features, outcome=outcome, seed=seed)


def _derived_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def _fit_estimator(name: str, train: Dataset, validation: Dataset,
                   lattice_cap: int):
    """Fit one named estimator; returns (predict callable, extras dict)."""
    if name == "ltb":
        model = fit_ltb(train, validation)
        extras = {
            "depth": model.depth,
            "outer_iterations": model.outer_iterations,
            "n_terms": model.n_trees,
            "n_active": model.n_active_trees,
            "ledger_ok": check_ledger_dominance(model),
            "stop_reason": model.stop_reason,
        }
        return (lambda feats: predict_ltb(model, feats)), extras
    if name == "gbt":
        model = fit_gbt_tuned(train, validation)
        extras = {"depth": model.depth, "n_terms": model.n_trees}
        return (lambda feats: predict_ensemble(model, feats)), extras
    if name == "hal":
        model = fit_hal(train, validation, cap=lattice_cap)
        extras = {"n_terms": model.n_bases, "n_active": model.n_bases}
        return (lambda feats: predict_hal(model, feats)), extras
    if name == "lasso":
        path = solve_path(DesignMatrix(train.features), train.outcome,
                          DesignMatrix(validation.features), validation.outcome)
        _, sol = best_by_validation(path)
        extras = {"n_active": int(np.count_nonzero(sol.coefficients))}
        return (lambda feats: predict_solution(sol, np.asarray(feats, dtype=np.float64))), extras
    if name == "mean":
        base = float(np.mean(train.outcome))
        return (lambda feats: np.full(np.asarray(feats).shape[0], base)), {}
    raise DataError(f"unknown estimator {name!r}")


def _check_estimators(names, allowed) -> tuple:
    names = tuple(names)
    if not names:
        raise DataError("estimator set is empty")
    for name in names:
        if name not in allowed:
            raise DataError(f"unknown estimator {name!r}; choose from {allowed}")
    if len(set(names)) != len(names):
        raise DataError("estimator set contains duplicates")
    return names


@dataclass
class RateCell:
    estimator: str
    n: int
    rep: int
    l2_error: float
    fit_seconds: float
    error: str | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class RateResult:
    ns: tuple
    reps: int
    holdout_n: int
    seed: int
    estimators: tuple
    cells: list
    medians: dict
    slopes: dict


def fit_loglog_slope(ns, errors) -> tuple[float, float]:
    """OLS slope and intercept of log(error) on log(n); NaN under 2 points."""
    ns = np.asarray(ns, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    keep = np.isfinite(errors) & (errors > 0) & (ns > 0)
    if keep.sum() < 2:
        return float("nan"), float("nan")
    coeffs = np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)
    return float(coeffs[0]), float(coeffs[1])


def _rate_cell(args) -> RateCell:
    estimator, n, rep, seed, holdout_n, lattice_cap = args
    try:
        sample = generate_dgp(n, np.random.SeedSequence([seed, n, rep, _TAG_SAMPLE]))
        data = Dataset(sample.features, sample.outcome, ("x1", "x2"))
        spec = SplitSpec(test_fraction=0.0, validation_fraction=0.2,
                         seed=_derived_seed(seed, n, rep, _TAG_SPLIT))
        train, validation, _ = split(data, spec)
        started = time.perf_counter()
        predict, extras = _fit_estimator(estimator, train, validation, lattice_cap)
        seconds = time.perf_counter() - started
        holdout = generate_dgp(holdout_n, np.random.SeedSequence([seed, _TAG_HOLDOUT]))
        truth = dgp_mean(holdout.features)
        l2 = float(np.mean((predict(holdout.features) - truth) ** 2))
        return RateCell(estimator, n, rep, l2, seconds, None, extras)
    except (DataError, FitError, InfeasibleError) as exc:
        log.warning("rate cell (%s, n=%d, rep=%d) failed: %s", estimator, n, rep, exc)
        return RateCell(estimator, n, rep, float("nan"), float("nan"),
                        f"{type(exc).__name__}: {exc}", {})


def _run_cells(worker, specs, jobs: int) -> list:
    if jobs <= 1 or len(specs) <= 1:
        return [worker(s) for s in specs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, specs))


def run_rate_study(ns=DEFAULT_RATE_NS, reps: int = DEFAULT_RATE_REPS,
                   estimators=("ltb", "gbt", "mean"),
                   holdout_n: int = DEFAULT_HOLDOUT_N, seed: int = 0,
                   jobs: int = 1,
                   lattice_cap: int = DEFAULT_LATTICE_CAP) -> RateResult:
    """Fit every estimator at every (n, rep) and summarize error decay.

    Per-cell failures are recorded in the cell's error field, not raised.
    The holdout sample is shared by every cell (keyed by the base seed
    alone), so cross-cell comparisons are free of holdout resampling noise.
    """
    ns = tuple(int(v) for v in ns)
    if not ns or any(v < 1 for v in ns):
        raise DataError(f"ns must be positive integers, got {ns}")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise DataError(f"ns must be strictly increasing, got {ns}")
    if reps < 1:
        raise DataError(f"reps must be >= 1, got {reps}")
    if holdout_n < 1:
        raise DataError(f"holdout_n must be >= 1, got {holdout_n}")
    if seed < 0:
        raise DataError(f"seed must be >= 0, got {seed}")
    estimators = _check_estimators(estimators, RATE_ESTIMATORS)

    specs = [(est, n, rep, seed, holdout_n, lattice_cap)
             for est in estimators for n in ns for rep in range(reps)]
    cells = _run_cells(_rate_cell, specs, jobs)
    cells.sort(key=lambda c: (c.estimator, c.n, c.rep))

    medians: dict = {}
    slopes: dict = {}
    for est in estimators:
        per_n = {}
        for n in ns:
            vals = [c.l2_error for c in cells
                    if c.estimator == est and c.n == n and np.isfinite(c.l2_error)]
            per_n[n] = float(np.median(vals)) if vals else float("nan")
        medians[est] = per_n
        slopes[est] = fit_loglog_slope(list(per_n.keys()), list(per_n.values()))
    return RateResult(ns=ns, reps=reps, holdout_n=holdout_n, seed=seed,
                      estimators=estimators, cells=cells, medians=medians,
                      slopes=slopes)


def rates_csv(result: RateResult) -> str:
    buf = io.StringIO()
    buf.write("estimator,n,rep,l2_error\n")
    for c in result.cells:
        buf.write(f"{c.estimator},{c.n},{c.rep},{c.l2_error!r}\n")
    return buf.getvalue()


def slopes_csv(result: RateResult) -> str:
    buf = io.StringIO()
    buf.write("estimator,slope,intercept,n_points\n")
    for est in result.estimators:
        slope, intercept = result.slopes[est]
        n_points = sum(1 for v in result.medians[est].values() if np.isfinite(v))
        buf.write(f"{est},{slope!r},{intercept!r},{n_points}\n")
    return buf.getvalue()


_DETAIL_KEYS = ("depth", "outer_iterations", "n_terms", "n_active",
                "ledger_ok", "stop_reason")


def rate_details_csv(result: RateResult) -> str:
    buf = io.StringIO()
    buf.write("estimator,n,rep,fit_seconds," + ",".join(_DETAIL_KEYS) + ",error\n")
    for c in result.cells:
        detail = ",".join(str(c.extras.get(k, "")) for k in _DETAIL_KEYS)
        err = c.error or ""
        buf.write(f"{c.estimator},{c.n},{c.rep},{c.fit_seconds!r},{detail},"
                  f"{err.replace(',', ';')}\n")
    return buf.getvalue()


def write_rate_outputs(result: RateResult, outdir) -> dict:
    outdir = Path(outdir)
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "rates": outdir / "rates.csv",
        "slopes": outdir / "slopes.csv",
        "details": outdir / "rates_details.csv",
    }
    atomic_write_text(paths["rates"], rates_csv(result))
    atomic_write_text(paths["slopes"], slopes_csv(result))
    atomic_write_text(paths["details"], rate_details_csv(result))
    return paths


@dataclass
class BenchCell:
    dataset: str
    estimator: str
    rep: int
    rmse: float
    seconds: float
    error: str | None = None
    infeasible: bool = False
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    path: str
    n: int
    p: int


@dataclass
class BenchResult:
    datasets: list
    dataset_errors: dict
    estimators: tuple
    reps: int
    seed: int
    cells: list
    aggregates: dict


def _bench_cell(args) -> BenchCell:
    path, name, estimator, rep, seed, outcome_column, lattice_cap = args
    try:
        data = load_csv(path, outcome_column)
        spec = SplitSpec(seed=_derived_seed(seed, zlib.crc32(name.encode()),
                                            rep, _TAG_SPLIT))
        train, validation, test = split(data, spec)
        started = time.perf_counter()
        predict, extras = _fit_estimator(estimator, train, validation, lattice_cap)
        seconds = time.perf_counter() - started
        cell_rmse = rmse(predict(test.features), test.outcome)
        return BenchCell(name, estimator, rep, cell_rmse, seconds, None, False, extras)
    except InfeasibleError as exc:
        return BenchCell(name, estimator, rep, float("nan"), float("nan"),
                         f"InfeasibleError: {exc}", True, {})
    except (DataError, FitError) as exc:
        log.warning("bench cell (%s, %s, rep=%d) failed: %s", name, estimator, rep, exc)
        return BenchCell(name, estimator, rep, float("nan"), float("nan"),
                         f"{type(exc).__name__}: {exc}", False, {})


def run_benchmark(dataset_paths, estimators=("ltb", "gbt", "lasso"),
                  reps: int = DEFAULT_BENCH_REPS, seed: int = 0,
                  outcome_column=None, jobs: int = 1,
                  lattice_cap: int = DEFAULT_LATTICE_CAP) -> BenchResult:
    """Repeated-split RMSE and fit-time benchmark over CSV datasets.

    Datasets that cannot be loaded or are too small to split are recorded
    in dataset_errors and skipped. Estimator failures (including lattice
    infeasibility) are recorded per cell; aggregates average the reps that
    succeeded.
    """
    if not dataset_paths:
        raise DataError("no dataset paths given")
    if reps < 1:
        raise DataError(f"reps must be >= 1, got {reps}")
    if seed < 0:
        raise DataError(f"seed must be >= 0, got {seed}")
    estimators = _check_estimators(estimators, BENCH_ESTIMATORS)

    infos = []
    dataset_errors: dict = {}
    seen_names = set()
    for raw in dataset_paths:
        name = Path(raw).stem
        if name in seen_names:
            raise DataError(f"duplicate dataset name {name!r}")
        seen_names.add(name)
        try:
            data = load_csv(raw, outcome_column)
            split(data, SplitSpec(seed=0))
        except (DataError, FitError) as exc:
            dataset_errors[name] = f"{type(exc).__name__}: {exc}"
            log.warning("dataset %s skipped: %s", name, exc)
            continue
        infos.append(DatasetInfo(name=name, path=str(raw), n=data.n, p=data.p))
    infos.sort(key=lambda d: (d.p * d.n, d.name))

    specs = [(info.path, info.name, est, rep, seed, outcome_column, lattice_cap)
             for info in infos for est in estimators for rep in range(reps)]
    cells = _run_cells(_bench_cell, specs, jobs)
    order = {info.name: i for i, info in enumerate(infos)}
    cells.sort(key=lambda c: (order[c.dataset], c.estimator, c.rep))

    aggregates: dict = {}
    for info in infos:
        for est in estimators:
            sub = [c for c in cells if c.dataset == info.name and c.estimator == est]
            ok = [c for c in sub if c.error is None]
            aggregates[(info.name, est)] = {
                "mean_rmse": float(np.mean([c.rmse for c in ok])) if ok else float("nan"),
                "mean_seconds": float(np.mean([c.seconds for c in ok])) if ok else float("nan"),
                "reps_ok": len(ok),
                "infeasible": bool(sub) and all(c.infeasible for c in sub),
            }
    return BenchResult(datasets=infos, dataset_errors=dataset_errors,
                       estimators=estimators, reps=reps, seed=seed,
                       cells=cells, aggregates=aggregates)


def bench_csv(result: BenchResult) -> str:
    buf = io.StringIO()
    buf.write("dataset,estimator,mean_rmse,mean_seconds,reps\n")
    for info in result.datasets:
        for est in result.estimators:
            agg = result.aggregates[(info.name, est)]
            if agg["reps_ok"]:
                buf.write(f"{info.name},{est},{agg['mean_rmse']!r},"
                          f"{agg['mean_seconds']!r},{agg['reps_ok']}\n")
            else:
                buf.write(f"{info.name},{est},,,0\n")
    return buf.getvalue()


def bench_table_csv(result: BenchResult) -> str:
    """Wide table: one dataset row, one estimator column, 'rmse (seconds)' cells."""
    buf = io.StringIO()
    buf.write("dataset,n,p," + ",".join(result.estimators) + "\n")
    for info in result.datasets:
        cells = []
        for est in result.estimators:
            agg = result.aggregates[(info.name, est)]
            if agg["reps_ok"]:
                cells.append(f"{agg['mean_rmse']:.4g} ({agg['mean_seconds']:.2f})")
            else:
                cells.append("--")
        buf.write(f"{info.name},{info.n},{info.p}," + ",".join(cells) + "\n")
    return buf.getvalue()


def write_bench_outputs(result: BenchResult, outdir) -> dict:
    outdir = Path(outdir)
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "bench": outdir / "bench.csv",
        "table": outdir / "bench_table.csv",
    }
    atomic_write_text(paths["bench"], bench_csv(result))
    atomic_write_text(paths["table"], bench_table_csv(result))
    return paths

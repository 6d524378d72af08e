"""Command-line front door: fit, predict, simulate-rates, bench.

Exit codes: 0 success, 1 usage error, 2 data or fitting error, 3 lattice
infeasibility. All numeric flags are validated by the owning module's
config constructors before any data is read, and every output file is
written atomically.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import experiments
from .dataset import SplitSpec, load_csv, load_table, rmse, split
from .errors import DataError, FitError, InfeasibleError
from .gbt import EarlyStopConfig, fit_gbt_tuned
from .hal import DEFAULT_LATTICE_CAP, fit_hal, predict_hal
from .lasso import DEFAULT_LAMBDA_MIN_RATIO, DEFAULT_N_LAMBDAS, DEFAULT_TOL
from .ltb import DEFAULT_STAGNATION_PATIENCE, LtbConfig, fit_ltb
from .persist import atomic_write_text, load_model, predict_model, save_model

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _outcome_arg(value):
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise DataError(f"expected a comma-separated integer list, got {text!r}") from None


def _outcome_header_name(path, outcome) -> str:
    with open(path, newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    if outcome is None:
        return header[-1]
    if isinstance(outcome, int):
        if not (0 <= outcome < len(header)):
            raise DataError(
                f"outcome column index {outcome} out of range for {len(header)} columns")
        return header[outcome]
    return outcome


def _add_common(sub):
    sub.add_argument("--verbose", action="store_true", help="debug logging")


def _add_fit_flags(sub):
    sub.add_argument("--seed", type=int, default=0, help="split seed")
    sub.add_argument("--test-fraction", type=float, default=0.0)
    sub.add_argument("--validation-fraction", type=float, default=0.2)
    sub.add_argument("--learning-rate", type=float, default=0.05)
    sub.add_argument("--patience", type=int, default=3,
                     help="validation increases required to stop boosting")
    sub.add_argument("--stop-epsilon", type=float, default=0.0,
                     help="boosting early-stop slack")
    sub.add_argument("--max-trees", type=int, default=10_000)
    sub.add_argument("--max-depth", type=int, default=12)
    sub.add_argument("--min-leaf", type=int, default=1)
    sub.add_argument("--trees-per-iteration", type=int, default=10)
    sub.add_argument("--lookback-epsilon", type=float, default=0.0,
                     help="look-back stopping slack")
    sub.add_argument("--stagnation-patience", type=int,
                     default=DEFAULT_STAGNATION_PATIENCE,
                     help="identical candidates required to declare convergence")
    sub.add_argument("--l1-bound", type=float, default=None,
                     help="L1 cap for path candidates (default: scaled from the initial ensemble)")
    sub.add_argument("--n-lambdas", type=int, default=DEFAULT_N_LAMBDAS)
    sub.add_argument("--lambda-min-ratio", type=float, default=DEFAULT_LAMBDA_MIN_RATIO)
    sub.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sub.add_argument("--lattice-cap", type=int, default=DEFAULT_LATTICE_CAP)


def build_parser() -> _Parser:
    parser = _Parser(prog="ltboost", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit a model and write a model file")
    fit.add_argument("--train", required=True, help="training CSV")
    fit.add_argument("--outcome", required=True,
                     help="outcome column name (or 0-based index)")
    fit.add_argument("--model", required=True, help="output model file")
    fit.add_argument("--estimator", choices=("ltb", "gbt", "hal"), default="ltb")
    _add_fit_flags(fit)
    _add_common(fit)
    fit.set_defaults(func=cmd_fit)

    pred = subs.add_parser("predict", help="predict with a saved model")
    pred.add_argument("--model", required=True, help="model file from fit")
    pred.add_argument("--data", required=True, help="feature CSV (header-matched)")
    pred.add_argument("--output", required=True, help="output prediction CSV")
    _add_common(pred)
    pred.set_defaults(func=cmd_predict)

    rates = subs.add_parser("simulate-rates",
                            help="convergence-rate study on the synthetic generator")
    rates.add_argument("--ns", default="250,500,1000,2000,4000",
                       help="comma-separated sample sizes")
    rates.add_argument("--reps", type=int, default=experiments.DEFAULT_RATE_REPS)
    rates.add_argument("--holdout", type=int, default=experiments.DEFAULT_HOLDOUT_N)
    rates.add_argument("--estimators", default="ltb,gbt,mean",
                       help=f"subset of {','.join(experiments.RATE_ESTIMATORS)}")
    rates.add_argument("--seed", type=int, default=0)
    rates.add_argument("--out", default=".", help="output directory")
    rates.add_argument("--jobs", type=int, default=1)
    rates.add_argument("--lattice-cap", type=int, default=DEFAULT_LATTICE_CAP)
    _add_common(rates)
    rates.set_defaults(func=cmd_simulate_rates)

    bench = subs.add_parser("bench", help="RMSE/timing benchmark over CSV datasets")
    bench.add_argument("--data", nargs="+", required=True, help="dataset CSV paths")
    bench.add_argument("--outcome", default=None,
                       help="outcome column name or index (default: last column)")
    bench.add_argument("--estimators", default="ltb,gbt,lasso",
                       help=f"subset of {','.join(experiments.BENCH_ESTIMATORS)}")
    bench.add_argument("--reps", type=int, default=experiments.DEFAULT_BENCH_REPS)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=".", help="output directory")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--lattice-cap", type=int, default=DEFAULT_LATTICE_CAP)
    _add_common(bench)
    bench.set_defaults(func=cmd_bench)
    return parser


def cmd_fit(args) -> int:
    early = EarlyStopConfig(patience=args.patience, epsilon=args.stop_epsilon,
                            max_trees=args.max_trees)
    ltb_config = LtbConfig(
        trees_per_iteration=args.trees_per_iteration,
        l1_upper_bound=args.l1_bound,
        epsilon=args.lookback_epsilon,
        stagnation_patience=args.stagnation_patience,
        early_stop=early,
        learning_rate=args.learning_rate,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        n_lambdas=args.n_lambdas,
        lambda_min_ratio=args.lambda_min_ratio,
        tol=args.tol,
    )
    outcome = _outcome_arg(args.outcome)
    data = load_csv(args.train, outcome)
    outcome_name = _outcome_header_name(args.train, outcome)
    spec = SplitSpec(test_fraction=args.test_fraction,
                     validation_fraction=args.validation_fraction, seed=args.seed)
    train, validation, _ = split(data, spec)

    if args.estimator == "ltb":
        model = fit_ltb(train, validation, ltb_config)
        print(f"selected depth: {model.depth}")
        print(f"tree count: {model.n_trees}")
        print(f"active trees: {model.n_active_trees}")
        print(f"selected lambda: {model.selected_lambda!r}")
        print(f"validation loss: {model.selected_validation_loss!r}")
        print(f"stop reason: {model.stop_reason}")
    elif args.estimator == "gbt":
        model = fit_gbt_tuned(train, validation, early, args.learning_rate,
                              args.min_leaf, args.max_depth)
        print(f"selected depth: {model.depth}")
        print(f"tree count: {model.n_trees}")
        print(f"validation loss: {model.best_validation_loss!r}")
    else:
        model = fit_hal(train, validation, n_lambdas=args.n_lambdas,
                        lambda_min_ratio=args.lambda_min_ratio, tol=args.tol,
                        cap=args.lattice_cap)
        val_loss = float(
            ((predict_hal(model, validation.features) - validation.outcome) ** 2).mean())
        print(f"active bases: {model.n_bases}")
        print(f"selected lambda: {model.selected_lambda!r}")
        print(f"variation norm: {model.variation_norm!r}")
        print(f"validation loss: {val_loss!r}")

    training_rmse = rmse(predict_model(model, data.features), data.outcome)
    print(f"training rmse: {training_rmse!r}")
    save_model(model, args.model, feature_names=data.feature_names,
               outcome_name=outcome_name)
    print(f"wrote model to {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, meta = load_model(args.model)
    names, mat = load_table(args.data)
    feature_names = meta.get("feature_names")
    if feature_names:
        missing = [f for f in feature_names if f not in names]
        if missing:
            raise DataError(
                f"columns required by the model are missing from {args.data}: {missing}")
        idxs = [names.index(f) for f in feature_names]
        features = mat[:, idxs]
    else:
        features = mat
    predictions = predict_model(model, features)
    text = "prediction\n" + "".join(f"{float(v)!r}\n" for v in predictions)
    atomic_write_text(args.output, text)
    outcome_name = meta.get("outcome_name")
    if outcome_name and outcome_name in names:
        actual = mat[:, names.index(outcome_name)]
        print(f"rmse: {rmse(predictions, actual)!r}")
    print(f"wrote {predictions.shape[0]} predictions to {args.output}")
    return EXIT_OK


def cmd_simulate_rates(args) -> int:
    result = experiments.run_rate_study(
        ns=_parse_int_list(args.ns), reps=args.reps,
        estimators=tuple(s.strip() for s in args.estimators.split(",") if s.strip()),
        holdout_n=args.holdout, seed=args.seed, jobs=args.jobs,
        lattice_cap=args.lattice_cap)
    paths = experiments.write_rate_outputs(result, args.out)
    for est in result.estimators:
        slope, _ = result.slopes[est]
        print(f"{est}: log-log slope {slope:.4f}")
    failed = sum(1 for c in result.cells if c.error is not None)
    if failed:
        print(f"{failed} of {len(result.cells)} cells failed; see details CSV")
    for key in ("rates", "slopes", "details"):
        print(f"wrote {paths[key]}")
    return EXIT_OK


def cmd_bench(args) -> int:
    result = experiments.run_benchmark(
        dataset_paths=args.data,
        estimators=tuple(s.strip() for s in args.estimators.split(",") if s.strip()),
        reps=args.reps, seed=args.seed, outcome_column=_outcome_arg(args.outcome),
        jobs=args.jobs, lattice_cap=args.lattice_cap)
    for name, message in sorted(result.dataset_errors.items()):
        print(f"skipped {name}: {message}", file=sys.stderr)
    if not result.datasets:
        print("error: no usable datasets", file=sys.stderr)
        return EXIT_DATA
    paths = experiments.write_bench_outputs(result, args.out)
    for info in result.datasets:
        parts = []
        for est in result.estimators:
            agg = result.aggregates[(info.name, est)]
            cell = (f"{agg['mean_rmse']:.4g}" if agg["reps_ok"] else "--")
            parts.append(f"{est}={cell}")
        print(f"{info.name} (n={info.n}, p={info.p}): " + " ".join(parts))
    for key in ("bench", "table"):
        print(f"wrote {paths[key]}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, FitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

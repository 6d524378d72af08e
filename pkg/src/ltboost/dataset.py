"""Data model: CSV ingestion, deterministic splitting, squared-error loss."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FitError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n x p feature matrix with an aligned outcome vector.

    Immutable after construction; the arrays are marked read-only so
    instances can be shared freely across threads.
    """

    features: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DataError(f"features must be 2-D, got ndim={features.ndim}")
        outcome = np.asarray(self.outcome, dtype=np.float64)
        if outcome.ndim != 1:
            raise DataError(f"outcome must be 1-D, got ndim={outcome.ndim}")
        if features.shape[0] != outcome.shape[0]:
            raise DataError(
                f"outcome length {outcome.shape[0]} != feature rows {features.shape[0]}"
            )
        # zero rows is allowed so split() can hand back an empty partition
        if features.shape[1] < 1:
            raise DataError("need at least one feature column")
        if not np.isfinite(features).all() or not np.isfinite(outcome).all():
            raise DataError("features and outcome must be finite")
        if self.feature_names is not None and len(self.feature_names) != features.shape[1]:
            raise DataError("feature_names length does not match feature count")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "outcome", _frozen(outcome))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.outcome[idx], self.feature_names)


@dataclass(frozen=True)
class SplitSpec:
    """Three-way split: test first, then validation from the remainder."""

    test_fraction: float = 0.10
    validation_fraction: float = 0.20
    seed: int = 0

    def __post_init__(self):
        for name in ("test_fraction", "validation_fraction"):
            f = getattr(self, name)
            if not (0.0 <= f < 1.0):
                raise DataError(f"{name} must be in [0, 1), got {f}")


def load_table(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a comma-separated numeric file with a header row.

    Returns (column names, n x c float matrix). Any cell that does not
    parse as a finite number is rejected with its row and column named.
    """
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]

        rows = []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"row {r} has {len(record)} cells, expected {len(header)}"
                )
            vals = []
            for c, cell in enumerate(record):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"non-numeric cell at row {r}, column {header[c]!r}: {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"non-finite cell at row {r}, column {header[c]!r}: {cell!r}"
                    )
                vals.append(v)
            rows.append(vals)

    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    return tuple(header), np.asarray(rows, dtype=np.float64)


def load_csv(path, outcome_column=None) -> Dataset:
    """Read a numeric CSV and peel off the outcome column.

    outcome_column is a header name, a 0-based index, or None for the last
    column.
    """
    header, data = load_table(path)
    if outcome_column is None:
        out_idx = len(header) - 1
    elif isinstance(outcome_column, int):
        if not (0 <= outcome_column < len(header)):
            raise DataError(
                f"outcome column index {outcome_column} out of range for {len(header)} columns"
            )
        out_idx = outcome_column
    else:
        try:
            out_idx = header.index(outcome_column)
        except ValueError:
            raise DataError(
                f"outcome column {outcome_column!r} not found in header {list(header)}"
            ) from None
    outcome = data[:, out_idx]
    features = np.delete(data, out_idx, axis=1)
    names = tuple(h for i, h in enumerate(header) if i != out_idx)
    if features.shape[1] == 0:
        raise DataError(f"{path} has no feature columns besides the outcome")
    return Dataset(features, outcome, names)


def save_csv(data: Dataset, path, outcome_name: str = "y") -> None:
    """Write a Dataset back to the CSV dialect load_csv reads."""
    names = data.feature_names or tuple(f"x{j + 1}" for j in range(data.p))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [outcome_name])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.features[i]]
                            + [repr(float(data.outcome[i]))])


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint, exhaustive (train, validation, test) row partition.

    Sizes are round-half-up: test = round(n * test_fraction), then
    validation = round(remaining * validation_fraction); all remaining rows
    go to train. Deterministic in (seed, n). A partition may be empty only
    when its fraction is exactly zero.
    """
    n = data.n
    n_test = _round_half_up(n * spec.test_fraction)
    n_val = _round_half_up((n - n_test) * spec.validation_fraction)
    n_train = n - n_test - n_val
    if spec.test_fraction > 0 and n_test == 0:
        raise FitError(f"test partition is empty for n={n}")
    if spec.validation_fraction > 0 and n_val == 0:
        raise FitError(f"validation partition is empty for n={n}")
    if n_train == 0:
        raise FitError(f"training partition is empty for n={n}")

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    val_idx = np.sort(perm[n_test:n_test + n_val])
    train_idx = np.sort(perm[n_test + n_val:])
    return data.take(train_idx), data.take(val_idx), data.take(test_idx)


def mse(predictions, outcomes) -> float:
    """Mean of squared differences between two equal-length vectors."""
    predictions = np.asarray(predictions, dtype=np.float64)
    outcomes = np.asarray(outcomes, dtype=np.float64)
    if predictions.shape != outcomes.shape or predictions.ndim != 1:
        raise DataError(
            f"shape mismatch: predictions {predictions.shape} vs outcomes {outcomes.shape}"
        )
    if predictions.shape[0] < 1:
        raise DataError("need at least one value")
    d = predictions - outcomes
    return float(np.mean(d * d))


def rmse(predictions, outcomes) -> float:
    return math.sqrt(mse(predictions, outcomes))

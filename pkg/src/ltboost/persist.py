"""JSON model files and atomic text output.

Every model kind serializes to a single JSON document with a format tag,
the feature schema it was trained on, and the model payload. Floats are
written with repr-style shortest round-trip, so a fixed seed produces
byte-identical files. Writes go through a same-directory temp file and an
atomic rename, so a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .cart import RegressionTree, TreeNode
from .errors import DataError
from .gbt import BoostedEnsemble, predict_ensemble
from .hal import HalModel, StepBasis, predict_hal
from .ltb import LedgerEntry, LtbModel, predict_ltb

FORMAT_NAME = "ltboost-model"
FORMAT_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    """Write text to path via temp file + rename; no partial files on error."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-write-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> TreeNode:
    if "value" in d:
        return TreeNode(value=float(d["value"]))
    return TreeNode(
        feature=int(d["feature"]),
        threshold=float(d["threshold"]),
        left=_node_from_dict(d["left"]),
        right=_node_from_dict(d["right"]),
    )


def tree_to_dict(tree: RegressionTree) -> dict:
    return {
        "max_depth": tree.max_depth,
        "n_features": tree.n_features,
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(d: dict) -> RegressionTree:
    return RegressionTree(
        root=_node_from_dict(d["root"]),
        max_depth=int(d["max_depth"]),
        n_features=int(d["n_features"]),
    )


def model_to_dict(model) -> dict:
    if isinstance(model, LtbModel):
        return {
            "kind": "ltb",
            "trees": [tree_to_dict(t) for t in model.trees],
            "coefficients": [float(c) for c in model.coefficients],
            "intercept": model.intercept,
            "selected_lambda": model.selected_lambda,
            "selected_iteration": model.selected_iteration,
            "selected_l1_norm": model.selected_l1_norm,
            "selected_validation_loss": model.selected_validation_loss,
            "outer_iterations": model.outer_iterations,
            "depth": model.depth,
            "l1_upper_bound": model.l1_upper_bound,
            "lookback_epsilon": model.lookback_epsilon,
            "stop_reason": model.stop_reason,
            "ledger": [[e.iteration, e.lam, e.l1_norm, e.validation_loss]
                       for e in model.ledger],
        }
    if isinstance(model, BoostedEnsemble):
        return {
            "kind": "gbt",
            "trees": [tree_to_dict(t) for t in model.trees],
            "learning_rate": model.learning_rate,
            "base_prediction": model.base_prediction,
            "validation_curve": [float(v) for v in model.validation_curve],
            "base_validation_loss": model.base_validation_loss,
            "depth": model.depth,
        }
    if isinstance(model, HalModel):
        return {
            "kind": "hal",
            "bases": [{"knot": [float(v) for v in basis.knot], "coefficient": coef}
                      for basis, coef in model.bases],
            "intercept": model.intercept,
            "variation_norm": model.variation_norm,
            "selected_lambda": model.selected_lambda,
        }
    raise DataError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "ltb":
        return LtbModel(
            trees=[tree_from_dict(t) for t in d["trees"]],
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            intercept=float(d["intercept"]),
            selected_lambda=float(d["selected_lambda"]),
            ledger=[LedgerEntry(iteration=int(e[0]), lam=float(e[1]),
                                l1_norm=float(e[2]), validation_loss=float(e[3]))
                    for e in d["ledger"]],
            selected_iteration=int(d["selected_iteration"]),
            selected_l1_norm=float(d["selected_l1_norm"]),
            selected_validation_loss=float(d["selected_validation_loss"]),
            outer_iterations=int(d["outer_iterations"]),
            depth=int(d["depth"]),
            l1_upper_bound=float(d["l1_upper_bound"]),
            lookback_epsilon=float(d["lookback_epsilon"]),
            stop_reason=str(d["stop_reason"]),
        )
    if kind == "gbt":
        return BoostedEnsemble(
            trees=[tree_from_dict(t) for t in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            base_prediction=float(d["base_prediction"]),
            validation_curve=[float(v) for v in d["validation_curve"]],
            base_validation_loss=float(d["base_validation_loss"]),
            depth=int(d["depth"]),
        )
    if kind == "hal":
        return HalModel(
            bases=[(StepBasis(np.asarray(b["knot"], dtype=np.float64)),
                    float(b["coefficient"])) for b in d["bases"]],
            intercept=float(d["intercept"]),
            variation_norm=float(d["variation_norm"]),
            selected_lambda=float(d["selected_lambda"]),
        )
    raise DataError(f"unknown model kind {kind!r}")


def save_model(model, path, feature_names=None, outcome_name=None) -> None:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "feature_names": list(feature_names) if feature_names is not None else None,
        "outcome_name": outcome_name,
        "model": model_to_dict(model),
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path):
    """Read a model file; returns (model, metadata dict)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path} is not a valid model file: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise DataError(f"{path} is not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    try:
        model = model_from_dict(doc["model"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path} has a malformed model payload: {e}") from e
    meta = {
        "feature_names": tuple(doc["feature_names"]) if doc.get("feature_names") else None,
        "outcome_name": doc.get("outcome_name"),
    }
    return model, meta


def predict_model(model, features) -> np.ndarray:
    """Dispatch prediction over any persistable model kind."""
    if isinstance(model, LtbModel):
        return predict_ltb(model, features)
    if isinstance(model, BoostedEnsemble):
        return predict_ensemble(model, features)
    if isinstance(model, HalModel):
        return predict_hal(model, features)
    raise DataError(f"cannot predict with model of type {type(model).__name__}")

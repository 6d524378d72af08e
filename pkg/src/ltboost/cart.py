"""Greedy depth-limited CART regression trees and their rectangle form.

Splits minimize the summed child squared error over every (feature,
observed value) candidate; routing is left iff x[feature] < threshold, so
the right branch carries the right-closed indicator 1(threshold <= x).
Ties break to the smallest feature index, then the smallest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = float("nan")

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class RegressionTree:
    root: TreeNode
    max_depth: int
    n_features: int

    def leaf_values(self) -> np.ndarray:
        vals = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                vals.append(node.value)
            else:
                stack.append(node.right)
                stack.append(node.left)
        return np.asarray(vals)

    def depth(self) -> int:
        def walk(node, d):
            if node.is_leaf:
                return d
            return max(walk(node.left, d + 1), walk(node.right, d + 1))

        return walk(self.root, 0)


@dataclass
class Rectangle:
    """Axis-aligned half-open box 1(lower <= x < upper) with a coefficient."""

    lower: np.ndarray
    upper: np.ndarray
    coefficient: float

    def contains(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        return np.all((features >= self.lower) & (features < self.upper), axis=1)


def _node_sse(y: np.ndarray) -> float:
    # Same sequential accumulation as the split kernels, so the
    # "does the best split actually reduce error" comparison is consistent.
    cs = np.cumsum(y)
    css = np.cumsum(y * y)
    n = y.shape[0]
    return float(css[-1] - (cs[-1] * cs[-1]) / n)


def _build(x: np.ndarray, y: np.ndarray, rows: np.ndarray, depth_left: int,
           min_leaf: int, out: np.ndarray) -> TreeNode:
    ys = y[rows]
    value = float(np.mean(ys))
    if depth_left == 0 or rows.shape[0] < 2 * min_leaf or np.ptp(ys) == 0.0:
        out[rows] = value
        return TreeNode(value=value)

    best_score = np.inf
    best = None  # (feature, order, pos)
    for j in range(x.shape[1]):
        xj = x[rows, j]
        order = np.argsort(xj, kind="stable")
        pos, score = _kernels.best_split_feature(
            np.ascontiguousarray(xj[order]), np.ascontiguousarray(ys[order]), min_leaf
        )
        if pos >= 0 and score < best_score:
            best_score = score
            best = (j, order, pos)

    if best is None or not (best_score < _node_sse(ys)):
        out[rows] = value
        return TreeNode(value=value)

    j, order, pos = best
    threshold = float(x[rows[order[pos]], j])
    left_rows = rows[order[:pos]]
    right_rows = rows[order[pos:]]
    node = TreeNode(feature=j, threshold=threshold)
    node.left = _build(x, y, left_rows, depth_left - 1, min_leaf, out)
    node.right = _build(x, y, right_rows, depth_left - 1, min_leaf, out)
    return node


def fit_tree_with_predictions(features, targets, max_depth: int,
                              min_leaf: int = 1) -> tuple[RegressionTree, np.ndarray]:
    """Fit a tree and return it with its training-row predictions.

    The predictions are the leaf values assigned during construction, which
    equal predict_tree on the training rows exactly; boosting reuses them to
    skip a routing pass.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DataError(f"bad shapes: features {x.shape}, targets {y.shape}")
    if x.shape[0] < 1:
        raise DataError("cannot fit a tree on zero rows")
    if max_depth < 0:
        raise DataError(f"max_depth must be >= 0, got {max_depth}")
    if min_leaf < 1:
        raise DataError(f"min_leaf must be >= 1, got {min_leaf}")

    out = np.empty(x.shape[0], dtype=np.float64)
    root = _build(x, y, np.arange(x.shape[0]), max_depth, min_leaf, out)
    return RegressionTree(root=root, max_depth=max_depth, n_features=x.shape[1]), out


def fit_tree(features, targets, max_depth: int, min_leaf: int = 1) -> RegressionTree:
    """Greedy squared-error CART fit; see module docstring for conventions."""
    tree, _ = fit_tree_with_predictions(features, targets, max_depth, min_leaf)
    return tree


def predict_tree(tree: RegressionTree, features) -> np.ndarray:
    """Route each row to its leaf (left iff x[feature] < threshold)."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != tree.n_features:
        raise DataError(
            f"feature matrix has shape {x.shape}, tree expects {tree.n_features} columns"
        )
    out = np.empty(x.shape[0], dtype=np.float64)
    stack = [(tree.root, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        go_left = x[idx, node.feature] < node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def to_rectangles(tree: RegressionTree) -> list[Rectangle]:
    """One half-open rectangle per leaf; their coefficient-weighted
    indicator sum reproduces predict_tree pointwise."""
    p = tree.n_features
    rects: list[Rectangle] = []

    def walk(node, lower, upper):
        if node.is_leaf:
            rects.append(Rectangle(lower.copy(), upper.copy(), node.value))
            return
        j, t = node.feature, node.threshold
        saved = upper[j]
        upper[j] = min(upper[j], t)
        walk(node.left, lower, upper)
        upper[j] = saved
        saved = lower[j]
        lower[j] = max(lower[j], t)
        walk(node.right, lower, upper)
        lower[j] = saved

    walk(tree.root, np.full(p, -np.inf), np.full(p, np.inf))
    return rects

"""Squared-loss gradient boosting over depth-limited regression trees.

Each round fits a tree to the current residuals. Splits maximise the
second-order gain with L2 leaf regularisation ``reg_lambda`` and leaves hold
``sum(residual) / (count + reg_lambda)``; the ensemble adds ``learning_rate``
times every tree's output to the training-target mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["GbtConfig", "GbtEnsemble", "RegressionTree", "gbt_fit"]


@dataclass(frozen=True)
class GbtConfig:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_samples_leaf: int = 5

    def __post_init__(self):
        if self.n_rounds < 0 or self.max_depth < 0:
            raise ValueError("n_rounds and max_depth must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class RegressionTree:
    """Array-encoded binary tree. ``feature[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def depth(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            rows = np.flatnonzero(inner)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True)
class GbtEnsemble:
    base_score: float
    trees: tuple[RegressionTree, ...]
    input_width: int
    config: GbtConfig = field(default_factory=GbtConfig)

    def predict(self, X, n_trees: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.input_width:
            raise ValueError(f"expected {self.input_width} features, got {X.shape[1]}")
        out = np.full(len(X), self.base_score)
        for tree in self.trees[:n_trees]:
            out += self.config.learning_rate * tree.predict(X)
        return out


def _best_split(X, g, rows, config):
    """First (feature, threshold) with the highest positive gain, or None."""
    lam = config.reg_lambda
    msl = config.min_samples_leaf
    n = len(rows)
    s = g[rows].sum()
    parent = s * s / (n + lam) if n + lam > 0 else 0.0
    best = None
    best_gain = 0.0
    for j in range(X.shape[1]):
        xs = X[rows, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        csum = np.cumsum(g[rows][order])
        # candidate k puts sorted rows [0, k] on the left
        k = np.arange(msl - 1, n - msl)
        if k.size == 0:
            continue
        k = k[xs[k] < xs[k + 1]]
        if k.size == 0:
            continue
        n_left = k + 1.0
        s_left = csum[k]
        s_right = s - s_left
        gain = s_left**2 / (n_left + lam) + s_right**2 / (n - n_left + lam) - parent
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            best = (j, float((xs[k[i]] + xs[k[i] + 1]) / 2.0))
    return best


def _fit_tree(X: np.ndarray, g: np.ndarray, config: GbtConfig) -> RegressionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(g[rows].sum() / (len(rows) + config.reg_lambda)))
        if depth < config.max_depth and len(rows) >= 2 * config.min_samples_leaf:
            split = _best_split(X, g, rows, config)
            if split is not None:
                j, thr = split
                mask = X[rows, j] <= thr
                feature[node] = j
                threshold[node] = thr
                left[node] = grow(rows[mask], depth + 1)
                right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


def gbt_fit(X, y, config: GbtConfig = GbtConfig()) -> GbtEnsemble:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) != len(y):
        raise ValueError(f"{len(X)} rows but {len(y)} targets")
    if len(y) < 2 * config.min_samples_leaf or len(y) == 0:
        raise ValueError(
            f"need at least {2 * config.min_samples_leaf} rows for min_samples_leaf={config.min_samples_leaf}"
        )
    base = float(y.mean())
    pred = np.full(len(y), base)
    trees = []
    for _ in range(config.n_rounds):
        tree = _fit_tree(X, y - pred, config)
        pred = pred + config.learning_rate * tree.predict(X)
        trees.append(tree)
    return GbtEnsemble(base, tuple(trees), X.shape[1], config)

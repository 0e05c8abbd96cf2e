"""Least-squares linear regression with an optional ridge penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FALLBACK_RIDGE", "LinearModel", "linear_fit"]

FALLBACK_RIDGE = 1e-8


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    ridge: float = 0.0
    regularized: bool = False

    @property
    def input_width(self) -> int:
        return self.coefficients.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.input_width:
            raise ValueError(f"expected {self.input_width} features, got {X.shape[1]}")
        return X @ self.coefficients + self.intercept


def linear_fit(X, y, ridge: float = 0.0) -> LinearModel:
    """Solve the normal equations of the intercept-augmented design.

    The intercept is never penalized. A rank-deficient design at
    ``ridge == 0`` is refit with :data:`FALLBACK_RIDGE` and flagged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) == 0:
        raise ValueError("cannot fit a linear model on zero rows")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} rows but {len(y)} targets")
    if ridge < 0:
        raise ValueError("ridge strength must be >= 0")
    A = np.column_stack([X, np.ones(len(X))])
    regularized = False
    if ridge == 0 and np.linalg.matrix_rank(A) < A.shape[1]:
        ridge, regularized = FALLBACK_RIDGE, True
    penalty = np.full(A.shape[1], ridge)
    penalty[-1] = 0.0
    gram = A.T @ A + np.diag(penalty)
    w = np.linalg.solve(gram, A.T @ y)
    return LinearModel(w[:-1], float(w[-1]), float(ridge), regularized)

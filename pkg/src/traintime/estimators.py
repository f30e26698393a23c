"""Scikit-learn estimator wrappers around the fitting routines.

These are thin adapters: validation and numeric work live in the
functional modules, the estimators just speak the fit/predict idiom so
the models drop into pipelines, grid searches, and cross-validation.

``StepTimeRegressor`` consumes rows of the six shape columns in CSV
order (d, n, s, v, w, h) and regresses seconds per step.
``ScalingLawRegressor`` consumes (params, data) rows and regresses
final loss at frozen exponents.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .accounting import flops_formula, memcpys_formula
from .errors import ValidationError
from .scaling import fit_law_from_nd
from .throughput import fit_time_from_counts

SHAPE_COLUMNS = ("d", "n", "s", "v", "w", "h")


def _as_2d(X, n_cols: int, what: str) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise ValidationError(
            f"{what} must be a 2-D array with {n_cols} columns, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite values")
    return arr


class StepTimeRegressor(RegressorMixin, BaseEstimator):
    """Linear step-time model presented as an sklearn regressor.

    Parameters
    ----------
    mode : one of "both", "memcpy_only", "flops_only"
        Which cost terms participate alongside the fixed overhead.

    Attributes
    ----------
    coefficients_ : TimeCoefficients
        The fitted model, shared with the functional API.
    """

    def __init__(self, mode: str = "both"):
        self.mode = mode

    def fit(self, X, y):
        X = _as_2d(X, len(SHAPE_COLUMNS), "X")
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}"
            )
        mem = [memcpys_formula(d, n, s, v, w, h) for d, n, s, v, w, h in X]
        flo = [flops_formula(d, n, s, v, w, h) for d, n, s, v, w, h in X]
        self.coefficients_ = fit_time_from_counts(mem, flo, y, mode=self.mode)
        return self

    def predict(self, X):
        if not hasattr(self, "coefficients_"):
            raise NotFittedError("StepTimeRegressor must be fit before predict")
        X = _as_2d(X, len(SHAPE_COLUMNS), "X")
        c = self.coefficients_
        out = np.empty(X.shape[0])
        for i, (d, n, s, v, w, h) in enumerate(X):
            out[i] = (
                c.c1 * memcpys_formula(d, n, s, v, w, h)
                + c.c2 * flops_formula(d, n, s, v, w, h)
                + c.c3
            )
        return out


class ScalingLawRegressor(RegressorMixin, BaseEstimator):
    """Parametric loss law A/N**alpha + B/D**beta + E as a regressor.

    The exponents are constructor parameters, not fitted: the law is
    linear in (A, B, E) once they are frozen, and they normally come
    from externally published estimates.

    Attributes
    ----------
    law_ : ScalingLaw
        The fitted law, shared with the functional API.
    """

    def __init__(self, alpha: float = 0.5, beta: float = 0.5):
        self.alpha = alpha
        self.beta = beta

    def fit(self, X, y):
        X = _as_2d(X, 2, "X")
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}"
            )
        self.law_ = fit_law_from_nd(X[:, 0], X[:, 1], y, alpha=self.alpha, beta=self.beta)
        return self

    def predict(self, X):
        if not hasattr(self, "law_"):
            raise NotFittedError("ScalingLawRegressor must be fit before predict")
        X = _as_2d(X, 2, "X")
        law = self.law_
        return law.A * X[:, 0] ** -law.alpha + law.B * X[:, 1] ** -law.beta + law.E

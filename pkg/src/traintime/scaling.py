"""Parametric loss law and loss prediction from hyperparameters alone.

The loss of a trained model is modeled as

    L(N, D) = A / N**alpha + B / D**beta + E

with N the parameter count and D the data quantity (optimizer steps or
tokens).  With alpha and beta fixed up front the law is linear in
(A, B, E) and is fit by the same least-squares core as the step-time
model.  Combining the law with a step-time model turns a training time
budget into a loss prediction that needs nothing but the architecture:

    L_hat(shape) = A / PARAMS**alpha + B / (T / TIME)**beta + E

(steps mode; tokens mode substitutes D = T / TIME * batch * s).

alpha and beta are required configuration with no shipped defaults:
they must come from the caller, typically externally published
exponents or a prior sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accounting import TransformerShape, count_params
from .errors import DomainError, ValidationError
from .regress import DesignMatrix, FitReport, calibration_line, least_squares_fit
from .throughput import TimeCoefficients, predict_step_time

TOKEN_MODES = ("steps", "tokens")


@dataclass(frozen=True)
class ScalingLaw:
    """Coefficients and exponents of the parametric loss law."""

    A: float
    B: float
    E: float
    alpha: float
    beta: float
    fit_r2: FitReport | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in ("A", "B", "E", "alpha", "beta"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValidationError(f"law field {name} must be finite, got {val!r}")
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValidationError(
                f"exponents must be positive, got alpha={self.alpha}, beta={self.beta}"
            )


@dataclass(frozen=True)
class TrainBudget:
    """Wall-clock training budget: T seconds at a fixed batch size.

    ``token_mode`` selects the units of the data axis: ``steps``
    counts optimizer steps, ``tokens`` counts batch * s tokens per
    step.  The fitted law must use the same units as the prediction.
    """

    T: float
    batch: int = 1
    token_mode: str = "steps"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise ValidationError(f"budget T must be a positive duration, got {self.T!r}")
        if self.batch < 1:
            raise ValidationError(f"batch must be >= 1, got {self.batch}")
        if self.token_mode not in TOKEN_MODES:
            raise ValidationError(
                f"unknown token_mode {self.token_mode!r}; expected one of {TOKEN_MODES}"
            )


def chinchilla_loss(params: float, data: float, law: ScalingLaw) -> float:
    """Evaluate L(N, D) = A / N**alpha + B / D**beta + E."""
    if not params > 0.0:
        raise DomainError(f"parameter count must be positive, got {params!r}")
    if not data > 0.0:
        raise DomainError(f"data quantity must be positive, got {data!r}")
    return law.A * params ** -law.alpha + law.B * data ** -law.beta + law.E


def data_quantity(record) -> float | None:
    """Data axis value of one run: tokens seen, else steps from timing."""
    if record.tokens_seen is not None:
        return record.tokens_seen
    if record.train_seconds is not None and record.seconds_per_step is not None:
        return record.train_seconds / record.seconds_per_step
    return None


def fit_law_from_nd(params, data, losses, alpha: float, beta: float) -> ScalingLaw:
    """Fit (A, B, E) by linear least squares with the exponents frozen.

    Features are N**-alpha and D**-beta; the intercept is E.  Negative
    fitted A or B are physically suspect, so they are flagged in
    ``notes`` but not clamped.
    """
    n_arr = np.asarray(params, dtype=float)
    d_arr = np.asarray(data, dtype=float)
    l_arr = np.asarray(losses, dtype=float)
    if np.any(n_arr <= 0.0) or np.any(d_arr <= 0.0):
        raise DomainError("parameter counts and data quantities must be positive")
    feats = np.column_stack([n_arr ** -alpha, d_arr ** -beta])
    coef = least_squares_fit(DesignMatrix(features=feats, targets=l_arr), with_intercept=True)
    a, b, e = (float(c) for c in coef)
    notes = []
    if a < 0.0:
        notes.append(f"fitted A is negative ({a:.6e}); law may be misspecified")
    if b < 0.0:
        notes.append(f"fitted B is negative ({b:.6e}); law may be misspecified")
    return ScalingLaw(A=a, B=b, E=e, alpha=alpha, beta=beta, notes=tuple(notes))


def fit_law_coefficients(dataset, alpha: float, beta: float) -> ScalingLaw:
    """Fit the loss law from a run dataset at frozen exponents.

    Uses rows with a final loss and a recoverable data quantity; rows
    tagged ``holdout`` are scored instead of fit, and their calibration
    line is stored in ``fit_r2``.  At least 4 fitting rows are required.
    """
    train_rows = []
    holdout_rows = []
    for record, tag in zip(dataset.records, dataset.split):
        if record.final_loss is None:
            continue
        d_val = data_quantity(record)
        if d_val is None:
            continue
        row = (count_params(record.shape), d_val, record.final_loss)
        if tag == "holdout":
            holdout_rows.append(row)
        else:
            train_rows.append(row)
    if len(train_rows) < 4:
        raise ValidationError(
            f"need at least 4 runs with loss and data quantity to fit, got {len(train_rows)}"
        )

    n_arr, d_arr, l_arr = zip(*train_rows)
    law = fit_law_from_nd(n_arr, d_arr, l_arr, alpha=alpha, beta=beta)

    report = None
    if len(holdout_rows) >= 2:
        predicted = [
            law.A * n ** -alpha + law.B * d ** -beta + law.E for n, d, _ in holdout_rows
        ]
        actual = [l for _, _, l in holdout_rows]
        report = calibration_line(predicted, actual)
    return ScalingLaw(
        A=law.A, B=law.B, E=law.E, alpha=alpha, beta=beta, fit_r2=report, notes=law.notes
    )


def estimate_data(shape: TransformerShape, coeffs: TimeCoefficients, budget: TrainBudget) -> float:
    """Data processed within the budget: steps, or tokens in tokens mode."""
    steps = budget.T / predict_step_time(shape, coeffs)
    if budget.token_mode == "tokens":
        return steps * budget.batch * shape.s
    return steps


def loss_from_components(
    params: float, step_seconds: float, seq_len: float, law: ScalingLaw, budget: TrainBudget
) -> float:
    """Loss law evaluated at a parameter count and a step duration.

    ``seq_len`` only matters in tokens mode, where the data quantity is
    (T / TIME) * batch * s.  This is the single evaluation path shared
    by shape-level prediction and the continuous descent tooling, so
    the two can never disagree.
    """
    if not params > 0.0:
        raise DomainError(f"parameter count must be positive, got {params!r}")
    if not step_seconds > 0.0:
        raise DomainError(f"step duration must be positive, got {step_seconds!r}")
    data = budget.T / step_seconds
    if budget.token_mode == "tokens":
        data *= budget.batch * seq_len
    return law.A * params ** -law.alpha + law.B * data ** -law.beta + law.E


def predict_loss_from_shape(
    shape: TransformerShape,
    coeffs: TimeCoefficients,
    law: ScalingLaw,
    budget: TrainBudget,
) -> float:
    """Predicted final loss of training ``shape`` for the whole budget."""
    t = predict_step_time(shape, coeffs)
    return loss_from_components(count_params(shape), t, shape.s, law, budget)

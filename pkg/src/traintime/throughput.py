"""Linear step-time model and its fitting routine.

One optimizer step is modeled as

    TIME = c1 * MEMCPYS + c2 * FLOPS + c3

with c1 the seconds per element moved, c2 the seconds per MAC, and c3
a fixed per-step overhead.  ``fit_time_coefficients`` recovers the
coefficients from measured runs; restricted modes fit the memcpy-only
or flops-only ablations of the same model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .accounting import (
    TransformerShape,
    count_flops,
    count_memcpys,
    flops_formula,
    memcpys_formula,
)
from .errors import NonphysicalTimeError, ValidationError
from .regress import DesignMatrix, FitReport, calibration_line, least_squares_fit

FIT_MODES = ("both", "memcpy_only", "flops_only")


@dataclass(frozen=True)
class TimeCoefficients:
    """Coefficients of the linear step-time model.

    ``mode`` records which terms were fit: restricted modes force the
    excluded coefficient to zero.  ``fit_r2`` holds the holdout
    calibration when the coefficients came from data; hand-constructed
    coefficients leave it None.
    """

    c1: float
    c2: float
    c3: float
    mode: str = "both"
    fit_r2: FitReport | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.mode not in FIT_MODES:
            raise ValidationError(
                f"unknown fit mode {self.mode!r}; expected one of {FIT_MODES}"
            )
        for name in ("c1", "c2", "c3"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValidationError(f"coefficient {name} must be finite, got {val!r}")
        if self.mode == "memcpy_only" and self.c2 != 0.0:
            raise ValidationError("memcpy_only coefficients must have c2 == 0")
        if self.mode == "flops_only" and self.c1 != 0.0:
            raise ValidationError("flops_only coefficients must have c1 == 0")


def step_time_value(coeffs: TimeCoefficients, d, n, s, v, w, h) -> float:
    """Model time at a (possibly real-valued) hyperparameter point."""
    return (
        coeffs.c1 * memcpys_formula(d, n, s, v, w, h)
        + coeffs.c2 * flops_formula(d, n, s, v, w, h)
        + coeffs.c3
    )


def predict_step_time(shape: TransformerShape, coeffs: TimeCoefficients) -> float:
    """Seconds per optimizer step for ``shape`` under ``coeffs``.

    Raises NonphysicalTimeError if the model yields a non-positive
    duration, which can happen with negative fitted coefficients.
    """
    t = step_time_value(coeffs, *shape.astuple())
    if not t > 0.0:
        raise NonphysicalTimeError(
            f"step-time model produced {t!r} seconds for shape {shape}"
        )
    return t


def throughput(shape: TransformerShape, coeffs: TimeCoefficients, batch: int = 1) -> float:
    """Tokens per second: batch * s / predicted step time."""
    if batch < 1:
        raise ValidationError(f"batch must be >= 1, got {batch}")
    return batch * shape.s / predict_step_time(shape, coeffs)


def _usable_seconds_per_step(record) -> float | None:
    if record.seconds_per_step is not None:
        return record.seconds_per_step
    if record.tokens_per_second is not None:
        return record.batch * record.shape.s / record.tokens_per_second
    return None


def fit_time_from_counts(memcpys, flops, seconds, mode: str = "both") -> TimeCoefficients:
    """Fit the step-time model from raw operation counts.

    ``memcpys``/``flops``/``seconds`` are parallel 1-D sequences.  The
    intercept c3 is always fit; ``mode`` selects which of the other
    two terms participate.  Negative fitted c1 or c2 are kept (they
    are what the data says) but flagged in ``notes``.
    """
    if mode not in FIT_MODES:
        raise ValidationError(f"unknown fit mode {mode!r}; expected one of {FIT_MODES}")
    mem = np.asarray(memcpys, dtype=float)
    flo = np.asarray(flops, dtype=float)
    sec = np.asarray(seconds, dtype=float)
    if mode == "both":
        feats = np.column_stack([mem, flo])
    elif mode == "memcpy_only":
        feats = mem.reshape(-1, 1)
    else:
        feats = flo.reshape(-1, 1)
    coef = least_squares_fit(DesignMatrix(features=feats, targets=sec), with_intercept=True)

    if mode == "both":
        c1, c2, c3 = coef
    elif mode == "memcpy_only":
        (c1, c3), c2 = coef, 0.0
    else:
        (c2, c3), c1 = coef, 0.0

    notes = []
    if c1 < 0.0:
        notes.append(f"fitted c1 is negative ({c1:.6e}); model may be misspecified")
    if c2 < 0.0:
        notes.append(f"fitted c2 is negative ({c2:.6e}); model may be misspecified")
    return TimeCoefficients(
        c1=float(c1), c2=float(c2), c3=float(c3), mode=mode, notes=tuple(notes)
    )


def fit_time_coefficients(dataset, mode: str = "both") -> TimeCoefficients:
    """Fit the step-time model from a run dataset.

    Rows tagged ``train`` (plus untagged rows) are fit; rows tagged
    ``holdout`` are scored and the resulting calibration line stored in
    ``fit_r2``.  A run contributes if it carries either seconds per
    step or tokens per second.  At least 4 usable fitting rows are
    required so the 3-coefficient system is overdetermined.
    """
    train_rows = []
    holdout_rows = []
    for record, tag in zip(dataset.records, dataset.split):
        t = _usable_seconds_per_step(record)
        if t is None:
            continue
        if tag == "holdout":
            holdout_rows.append((record, t))
        else:
            train_rows.append((record, t))
    if len(train_rows) < 4:
        raise ValidationError(
            f"need at least 4 runs with timing data to fit, got {len(train_rows)}"
        )

    mem = [count_memcpys(r.shape) for r, _ in train_rows]
    flo = [count_flops(r.shape) for r, _ in train_rows]
    sec = [t for _, t in train_rows]
    fitted = fit_time_from_counts(mem, flo, sec, mode=mode)

    report = None
    if len(holdout_rows) >= 2:
        predicted = [step_time_value(fitted, *r.shape.astuple()) for r, _ in holdout_rows]
        actual = [t for _, t in holdout_rows]
        report = calibration_line(predicted, actual)
    return TimeCoefficients(
        c1=fitted.c1,
        c2=fitted.c2,
        c3=fitted.c3,
        mode=mode,
        fit_r2=report,
        notes=fitted.notes,
    )

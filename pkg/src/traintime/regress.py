"""Scale-aware linear least squares and goodness-of-fit reporting.

The design matrices produced elsewhere in this package mix columns
whose magnitudes differ by twelve orders (operation counts in the 1e12
range next to an all-ones intercept), so the solver equilibrates
columns to unit norm before a pivoted QR factorization and rescales
the solution afterwards.  Rank deficiency is reported by column index
instead of being silently regularized away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystemError, UndefinedVarianceError, ValidationError


@dataclass(frozen=True)
class DesignMatrix:
    """Validated (features, targets) pair for one least-squares solve."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        targs = np.asarray(self.targets, dtype=float)
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-D, got ndim={feats.ndim}")
        if targs.ndim != 1:
            raise ValidationError(f"targets must be 1-D, got ndim={targs.ndim}")
        if feats.shape[0] != targs.shape[0]:
            raise ValidationError(
                f"row mismatch: {feats.shape[0]} feature rows, "
                f"{targs.shape[0]} targets"
            )
        if feats.shape[0] < feats.shape[1]:
            raise ValidationError(
                f"underdetermined system: {feats.shape[0]} rows for "
                f"{feats.shape[1]} columns"
            )
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features contain non-finite values")
        if not np.all(np.isfinite(targs)):
            raise ValidationError("targets contain non-finite values")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)


@dataclass(frozen=True)
class FitReport:
    """Calibration summary: best-fit line and both r-squared variants.

    ``r2_pearson`` is the squared Pearson correlation and is invariant
    under affine rescaling of the predictions; ``r2_raw`` is
    1 - SS_res / SS_tot and punishes miscalibrated scale or offset.
    """

    slope: float
    intercept: float
    r2_pearson: float
    r2_raw: float


def least_squares_fit(matrix: DesignMatrix, with_intercept: bool = False) -> np.ndarray:
    """Solve min ||features @ coef - targets|| by column-equilibrated QR.

    Returns the coefficient vector (intercept last when requested).
    Raises SingularSystemError naming the first dependent column if the
    equilibrated matrix is numerically rank deficient.
    """
    a = matrix.features
    if with_intercept:
        a = np.column_stack([a, np.ones(a.shape[0])])
    nrows, ncols = a.shape
    if nrows < ncols:
        raise ValidationError(
            f"underdetermined system: {nrows} rows for {ncols} columns "
            "after adding the intercept"
        )

    norms = np.linalg.norm(a, axis=0)
    zero_cols = np.nonzero(norms == 0.0)[0]
    if zero_cols.size:
        raise SingularSystemError(_column_label(zero_cols[0], ncols, with_intercept) + " is identically zero")
    scaled = a / norms

    q, r, piv = scipy.linalg.qr(scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(nrows, ncols) * np.finfo(float).eps * diag.max()
    rank = int(np.count_nonzero(diag > tol))
    if rank < ncols:
        offender = _column_label(int(piv[rank]), ncols, with_intercept)
        raise SingularSystemError(
            f"design matrix is rank deficient (rank {rank} of {ncols}); "
            f"{offender} is linearly dependent on the preceding columns"
        )

    rhs = q.T @ matrix.targets
    solved = scipy.linalg.solve_triangular(r, rhs)
    coef = np.empty(ncols)
    coef[piv] = solved
    return coef / norms


def _column_label(index: int, ncols: int, with_intercept: bool) -> str:
    if with_intercept and index == ncols - 1:
        return "the intercept column"
    return f"feature column {index}"


def r_squared(predicted, actual) -> tuple[float, float]:
    """Return (r2_pearson, r2_raw) of predictions against observations.

    A constant ``actual`` vector has no variance to explain and raises
    UndefinedVarianceError.  A constant ``predicted`` vector leaves the
    Pearson correlation undefined; it is reported as 0.0 (no linear
    association) while r2_raw is still meaningful.
    """
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.ndim != 1 or a.ndim != 1:
        raise ValidationError("predicted and actual must be 1-D")
    if p.shape[0] != a.shape[0] or p.shape[0] == 0:
        raise ValidationError(
            f"length mismatch: {p.shape[0]} predictions, {a.shape[0]} observations"
        )
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
        raise ValidationError("r-squared inputs contain non-finite values")

    a_centered = a - a.mean()
    ss_tot = float(a_centered @ a_centered)
    if ss_tot == 0.0:
        raise UndefinedVarianceError(
            "observations are constant; r-squared is undefined"
        )
    resid = a - p
    r2_raw = 1.0 - float(resid @ resid) / ss_tot

    p_centered = p - p.mean()
    ss_pred = float(p_centered @ p_centered)
    if ss_pred == 0.0:
        r2_pearson = 0.0
    else:
        cov = float(p_centered @ a_centered)
        r2_pearson = min(cov * cov / (ss_pred * ss_tot), 1.0)
    return r2_pearson, r2_raw


def calibration_line(predicted, actual) -> FitReport:
    """Regress predictions on observations and report fit quality.

    The slope/intercept answer "how far from the y = x line do the
    predictions land", so ``predicted`` is the response and ``actual``
    the regressor.  A perfectly calibrated model gives slope 1,
    intercept 0.
    """
    r2_pearson, r2_raw = r_squared(predicted, actual)
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    coef = least_squares_fit(
        DesignMatrix(features=a.reshape(-1, 1), targets=p), with_intercept=True
    )
    return FitReport(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        r2_pearson=r2_pearson,
        r2_raw=r2_raw,
    )

"""Architecture recommendations from the predicted-loss surface.

Treats (d, n, w, h) as real variables with s and v pinned, and works
with the exact gradient of the predicted loss

    L_hat = A * PARAMS**-alpha + B * D**-beta + E,   D = k * T / TIME

whose chain rule splits into a parameter path and a time path:

    dL/dx = -alpha*A*PARAMS**(-alpha-1) * dPARAMS/dx
            + (beta*B*D**-beta / TIME) * dTIME/dx

(the same expression in both token modes, since D is proportional to
1/TIME either way).  Projecting -dL/dx onto the tangent space of a
constant-PARAMS level set answers "which architecture trade is worth
making at fixed size"; following that direction with a Newton
correction back onto the level set gives a short descent trajectory,
and a local integer search turns its endpoint into a trainable shape.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .accounting import (
    TransformerShape,
    flops_gradient,
    memcpys_gradient,
    params_formula,
    params_gradient,
)
from .errors import (
    DegenerateConstraintError,
    DomainError,
    NonphysicalTimeError,
    SweepRangeWarning,
    ValidationError,
)
from .scaling import ScalingLaw, TrainBudget, loss_from_components, predict_loss_from_shape
from .throughput import TimeCoefficients, step_time_value

AXES = ("d", "n", "w", "h")


@dataclass(frozen=True)
class HyperVector:
    """A point in the continuous relaxation of shape space.

    ``d``, ``n``, ``w``, ``h`` are free positive reals; ``s`` and ``v``
    ride along fixed.  Divisibility of d by h is deliberately not
    required here, only at the final rounding step.
    """

    d: float
    n: float
    w: float
    h: float
    s: float
    v: float

    def __post_init__(self) -> None:
        for name in ("d", "n", "w", "h", "s", "v"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"component {name} must be positive, got {val!r}")

    def free_array(self) -> np.ndarray:
        return np.array([self.d, self.n, self.w, self.h], dtype=float)

    def with_free(self, arr) -> "HyperVector":
        return replace(self, d=float(arr[0]), n=float(arr[1]), w=float(arr[2]), h=float(arr[3]))


@dataclass(frozen=True)
class HyperGradient:
    """Partial derivatives along the free axes (d, n, w, h)."""

    d: float
    n: float
    w: float
    h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.n, self.w, self.h], dtype=float)


@dataclass(frozen=True)
class FieldSample:
    """One grid point of a gradient field.

    ``arrow1``/``arrow2`` are the projected descent direction along the
    two grid axes.  Points where evaluation failed carry NaN payloads
    and the failure reason in ``error``.
    """

    coord1: float
    coord2: float
    arrow1: float
    arrow2: float
    loss: float
    params: float
    error: str | None = None


@dataclass(frozen=True)
class TrajectoryPoint:
    point: HyperVector
    loss: float
    params: float


@dataclass(frozen=True)
class RoundingReport:
    """Best integer shape near a continuous point, with its predicted loss."""

    shape: TransformerShape
    loss: float
    params: int


def _params_gradient_array(x: HyperVector) -> np.ndarray:
    g = params_gradient(x.d, x.n, x.v, x.w)
    return np.array([g.d, g.n, g.w, 0.0], dtype=float)


def _time_gradient_array(x: HyperVector, coeffs: TimeCoefficients) -> np.ndarray:
    gm = memcpys_gradient(x.d, x.n, x.s, x.v, x.w, x.h)
    gf = flops_gradient(x.d, x.n, x.s, x.v, x.w, x.h)
    return np.array(
        [
            coeffs.c1 * gm.d + coeffs.c2 * gf.d,
            coeffs.c1 * gm.n + coeffs.c2 * gf.n,
            coeffs.c1 * gm.w + coeffs.c2 * gf.w,
            coeffs.c1 * gm.h + coeffs.c2 * gf.h,
        ],
        dtype=float,
    )


def loss_value(x: HyperVector, coeffs: TimeCoefficients, law: ScalingLaw, budget: TrainBudget) -> float:
    """Predicted loss at a continuous point."""
    t = step_time_value(coeffs, x.d, x.n, x.s, x.v, x.w, x.h)
    if not t > 0.0:
        raise NonphysicalTimeError(f"step-time model produced {t!r} seconds at {x}")
    return loss_from_components(params_formula(x.d, x.n, x.v, x.w), t, x.s, law, budget)


def loss_gradient(
    x: HyperVector, coeffs: TimeCoefficients, law: ScalingLaw, budget: TrainBudget
) -> HyperGradient:
    """Exact gradient of the predicted loss over (d, n, w, h)."""
    t = step_time_value(coeffs, x.d, x.n, x.s, x.v, x.w, x.h)
    if not t > 0.0:
        raise NonphysicalTimeError(f"step-time model produced {t!r} seconds at {x}")
    n_val = params_formula(x.d, x.n, x.v, x.w)
    if not n_val > 0.0:
        raise DomainError(f"parameter count must be positive, got {n_val!r} at {x}")
    data = budget.T / t
    if budget.token_mode == "tokens":
        data *= budget.batch * x.s
    dl_dparams = -law.alpha * law.A * n_val ** (-law.alpha - 1.0)
    dl_dtime = law.beta * law.B * data ** -law.beta / t
    grad = dl_dparams * _params_gradient_array(x) + dl_dtime * _time_gradient_array(x, coeffs)
    return HyperGradient(d=float(grad[0]), n=float(grad[1]), w=float(grad[2]), h=float(grad[3]))


def _project_descent(grad: np.ndarray, constraint: np.ndarray) -> np.ndarray:
    """Steepest-descent direction tangent to the constraint level set.

    Returns -g + ((g . p) / (p . p)) p, the negative gradient with its
    component along the constraint normal removed.
    """
    pp = float(constraint @ constraint)
    if pp == 0.0:
        raise DegenerateConstraintError(
            "constraint gradient vanished; tangent projection is undefined"
        )
    return -grad + (float(grad @ constraint) / pp) * constraint


def project_onto_constant_params(g: HyperGradient, x: HyperVector) -> HyperGradient:
    """Descent direction at x that preserves PARAMS to first order."""
    out = _project_descent(g.as_array(), _params_gradient_array(x))
    return HyperGradient(d=float(out[0]), n=float(out[1]), w=float(out[2]), h=float(out[3]))


def gradient_field(
    axes: tuple[str, str],
    grid: tuple[tuple[float, float, int], tuple[float, float, int]],
    fixed: dict[str, float],
    coeffs: TimeCoefficients,
    law: ScalingLaw,
    budget: TrainBudget,
) -> list[FieldSample]:
    """Projected descent arrows over a 2-D slice of shape space.

    ``axes`` names two distinct free axes; ``fixed`` must supply the
    other two plus ``s`` and ``v``.  Samples are produced in row-major
    order (first axis outer).  Grid points where the models blow up
    become NaN samples with the reason recorded, not holes.
    """
    ax1, ax2 = axes
    if ax1 not in AXES or ax2 not in AXES or ax1 == ax2:
        raise ValidationError(
            f"axes must be two distinct of {AXES}, got {axes!r}"
        )
    needed = {a for a in AXES if a not in axes} | {"s", "v"}
    missing = needed - fixed.keys()
    if missing:
        raise ValidationError(f"fixed values missing for: {', '.join(sorted(missing))}")

    values = []
    for lo, hi, count in grid:
        if count < 1:
            raise ValidationError(f"grid axis needs at least 1 point, got {count}")
        if not (lo > 0.0 and hi >= lo):
            raise ValidationError(f"grid bounds must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        values.append(np.linspace(lo, hi, count))

    samples = []
    for v1 in values[0]:
        for v2 in values[1]:
            coords = dict(fixed)
            coords[ax1] = float(v1)
            coords[ax2] = float(v2)
            try:
                x = HyperVector(**{k: float(coords[k]) for k in ("d", "n", "w", "h", "s", "v")})
                direction = project_onto_constant_params(
                    loss_gradient(x, coeffs, law, budget), x
                )
                samples.append(
                    FieldSample(
                        coord1=float(v1),
                        coord2=float(v2),
                        arrow1=getattr(direction, ax1),
                        arrow2=getattr(direction, ax2),
                        loss=loss_value(x, coeffs, law, budget),
                        params=params_formula(coords["d"], coords["n"], coords["v"], coords["w"]),
                    )
                )
            except (ValidationError, DomainError, NonphysicalTimeError) as exc:
                samples.append(
                    FieldSample(
                        coord1=float(v1),
                        coord2=float(v2),
                        arrow1=math.nan,
                        arrow2=math.nan,
                        loss=math.nan,
                        params=math.nan,
                        error=str(exc),
                    )
                )
    return samples


# Level-set restoration: Newton steps along the PARAMS gradient, at
# most this many, stopping once the relative drift is below _DRIFT_TOL.
# _DRIFT_ACCEPT is the weaker bound a candidate must meet to be kept.
_NEWTON_ITERS = 5
_DRIFT_TOL = 1e-8
_DRIFT_ACCEPT = 1e-6


def _restore_level_set(x: HyperVector, target_params: float) -> HyperVector | None:
    for _ in range(_NEWTON_ITERS):
        current = params_formula(x.d, x.n, x.v, x.w)
        if abs(current - target_params) <= _DRIFT_TOL * target_params:
            return x
        p = _params_gradient_array(x)
        pp = float(p @ p)
        if pp == 0.0:
            return None
        arr = x.free_array() + ((target_params - current) / pp) * p
        if not np.all(arr > 0.0):
            return None
        x = x.with_free(arr)
    current = params_formula(x.d, x.n, x.v, x.w)
    if abs(current - target_params) <= _DRIFT_ACCEPT * target_params:
        return x
    return None


def constrained_descent(
    x0: HyperVector,
    coeffs: TimeCoefficients,
    law: ScalingLaw,
    budget: TrainBudget,
    step: float,
    iters: int,
) -> list[TrajectoryPoint]:
    """Projected descent at constant parameter count.

    Each iteration moves along the projected direction, restores the
    PARAMS level set, and keeps the candidate only if the predicted
    loss did not increase; otherwise the step is halved (up to 20
    times) and the walk stops when no acceptable candidate remains.
    The starting point is always recorded, so the result has between
    1 and iters + 1 entries.
    """
    if not (math.isfinite(step) and step >= 0.0):
        raise ValidationError(f"step must be >= 0, got {step!r}")
    if iters < 0:
        raise ValidationError(f"iters must be >= 0, got {iters}")

    target = params_formula(x0.d, x0.n, x0.v, x0.w)
    trajectory = [TrajectoryPoint(point=x0, loss=loss_value(x0, coeffs, law, budget), params=target)]
    x = x0
    for _ in range(iters):
        direction = project_onto_constant_params(
            loss_gradient(x, coeffs, law, budget), x
        ).as_array()
        accepted = None
        trial_step = step
        for _ in range(21):
            arr = x.free_array() + trial_step * direction
            if np.all(arr > 0.0):
                candidate = _restore_level_set(x.with_free(arr), target)
                if candidate is not None:
                    try:
                        cand_loss = loss_value(candidate, coeffs, law, budget)
                    except (DomainError, NonphysicalTimeError):
                        cand_loss = None
                    if cand_loss is not None and cand_loss <= trajectory[-1].loss:
                        accepted = (candidate, cand_loss)
                        break
            if trial_step == 0.0:
                break
            trial_step /= 2.0
        if accepted is None:
            break
        x, new_loss = accepted
        trajectory.append(
            TrajectoryPoint(
                point=x, loss=new_loss, params=params_formula(x.d, x.n, x.v, x.w)
            )
        )
    return trajectory


def round_to_lattice(
    x: HyperVector, coeffs: TimeCoefficients, law: ScalingLaw, budget: TrainBudget
) -> RoundingReport:
    """Search the 3^4 integer neighborhood of x for the best shape.

    Candidates take each free axis to floor/round/ceil-style values
    {round(v) - 1, round(v), round(v) + 1} clipped to >= 1, keep only
    shapes with h dividing d, and are ranked by predicted loss, then
    by distance of their parameter count from the continuous one, then
    lexicographically by (d, n, w, h) so ties resolve deterministically.
    """
    s = int(round(x.s))
    v = int(round(x.v))
    target = params_formula(x.d, x.n, x.v, x.w)

    def near(val: float) -> list[int]:
        base = int(round(val))
        return sorted({max(1, base - 1), max(1, base), max(1, base + 1)})

    best = None
    best_key = None
    for d in near(x.d):
        for n in near(x.n):
            for w in near(x.w):
                for h in near(x.h):
                    if d % h != 0:
                        continue
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", SweepRangeWarning)
                        shape = TransformerShape(d=d, n=n, s=s, v=v, w=w, h=h)
                    try:
                        loss = predict_loss_from_shape(shape, coeffs, law, budget)
                    except (DomainError, NonphysicalTimeError):
                        continue
                    key = (loss, abs(params_formula(d, n, v, w) - target), (d, n, w, h))
                    if best_key is None or key < best_key:
                        best = RoundingReport(
                            shape=shape, loss=loss, params=params_formula(d, n, v, w)
                        )
                        best_key = key
    if best is None:
        raise DomainError(
            f"no integer shape near ({x.d:.3g}, {x.n:.3g}, {x.w:.3g}, {x.h:.3g}) "
            "has h dividing d and a finite predicted loss"
        )
    return best

"""Closed-form cost accounting for decoder-only transformers.

Counts three quantities for a model described by embedding width ``d``,
layer count ``n``, sequence length ``s``, vocabulary size ``v``, MLP
width ``w``, and head count ``h``:

* ``params``   -- trainable parameter count (weights and biases, with the
  input and output embeddings tied),
* ``memcpys``  -- elements moved to and from memory during one forward
  pass at batch size 1,
* ``flops``    -- multiply-accumulates of the matrix products in the same
  pass (elementwise work is dropped as negligible).

The closed forms:

    PARAMS  = v*d + n*d*(8 + 2*w + 4*d) + n*w
    MEMCPYS = 2*v*d + 2*s*v + n*s*(w + 2*h*s) + 2*n*d*(w + 4*s + 2*d)
    FLOPS   = 2*s*v*d + 2*d*n*s*(w + 2*d + s) + n*h*s^2

All three are polynomials, so the module also exposes their exact
partial derivatives, which the descent tooling consumes at real-valued
points.  Integer inputs are evaluated in exact (arbitrary-precision)
integer arithmetic, so overflow cannot occur.
"""

from __future__ import annotations

import operator
import warnings
from dataclasses import dataclass, fields

from .errors import SweepRangeWarning, ValidationError

COUNT_KINDS = ("params", "memcpys", "flops")

# Hyperparameter ranges the downstream regressions were calibrated on.
# Values outside these bounds are legal but trigger SweepRangeWarning.
CALIBRATED_RANGES = {
    "d": (32, 4096),
    "n": (1, 8),
    "w": (256, 32768),
    "h": (1, 128),
}


@dataclass(frozen=True)
class TransformerShape:
    """Integer hyperparameters of one decoder-only transformer.

    Fields are coerced with ``operator.index`` so numpy integers are
    accepted but floats are not.  ``d`` must be divisible by ``h``
    because each attention head has width ``d / h``.
    """

    d: int
    n: int
    s: int
    v: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for f in fields(self):
            raw = getattr(self, f.name)
            try:
                val = operator.index(raw)
            except TypeError:
                raise ValidationError(
                    f"shape field {f.name} must be an integer, got {raw!r}"
                ) from None
            if val < 1:
                raise ValidationError(f"shape field {f.name} must be >= 1, got {val}")
            object.__setattr__(self, f.name, val)
        if self.d % self.h != 0:
            raise ValidationError(
                f"d must be divisible by h (d={self.d}, h={self.h})"
            )
        for name, (lo, hi) in CALIBRATED_RANGES.items():
            val = getattr(self, name)
            if not lo <= val <= hi:
                warnings.warn(
                    f"shape field {name}={val} is outside the calibrated "
                    f"range [{lo}, {hi}]; downstream fits extrapolate here",
                    SweepRangeWarning,
                    stacklevel=2,
                )

    def astuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.d, self.n, self.s, self.v, self.w, self.h)


@dataclass(frozen=True)
class CostBreakdown:
    """Itemized cost table: (label, count) components plus their total."""

    kind: str
    components: tuple[tuple[str, int], ...]
    total: int


@dataclass(frozen=True)
class CostGradient:
    """Partial derivatives of one count with respect to (d, n, w, h, s)."""

    kind: str
    d: float
    n: float
    w: float
    h: float
    s: float


def params_formula(d, n, v, w):
    """PARAMS as a polynomial; exact on ints, continuous on floats."""
    return v * d + n * d * (8 + 2 * w + 4 * d) + n * w


def memcpys_formula(d, n, s, v, w, h):
    """MEMCPYS as a polynomial; exact on ints, continuous on floats."""
    return 2 * v * d + 2 * s * v + n * s * (w + 2 * h * s) + 2 * n * d * (w + 4 * s + 2 * d)


def flops_formula(d, n, s, v, w, h):
    """FLOPS as a polynomial; exact on ints, continuous on floats."""
    return 2 * s * v * d + 2 * d * n * s * (w + 2 * d + s) + n * h * s * s


def count_params(shape: TransformerShape) -> int:
    """Trainable parameters of ``shape``, with tied embeddings."""
    return params_formula(shape.d, shape.n, shape.v, shape.w)


def count_memcpys(shape: TransformerShape) -> int:
    """Elements read or written during one batch-1 forward pass."""
    return memcpys_formula(shape.d, shape.n, shape.s, shape.v, shape.w, shape.h)


def count_flops(shape: TransformerShape) -> int:
    """Matrix-multiply MACs of one batch-1 forward pass."""
    return flops_formula(shape.d, shape.n, shape.s, shape.v, shape.w, shape.h)


def count_all(shape: TransformerShape) -> dict[str, int]:
    return {
        "params": count_params(shape),
        "memcpys": count_memcpys(shape),
        "flops": count_flops(shape),
    }


def params_gradient(d, n, v, w) -> CostGradient:
    return CostGradient(
        kind="params",
        d=v + n * (8 + 2 * w + 8 * d),
        n=d * (8 + 2 * w + 4 * d) + w,
        w=2 * n * d + n,
        h=0.0,
        s=0.0,
    )


def memcpys_gradient(d, n, s, v, w, h) -> CostGradient:
    return CostGradient(
        kind="memcpys",
        d=2 * v + 2 * n * (w + 4 * s + 4 * d),
        n=s * (w + 2 * h * s) + 2 * d * (w + 4 * s + 2 * d),
        w=n * s + 2 * n * d,
        h=2 * n * s * s,
        s=2 * v + n * (w + 4 * h * s) + 8 * n * d,
    )


def flops_gradient(d, n, s, v, w, h) -> CostGradient:
    return CostGradient(
        kind="flops",
        d=2 * s * v + 2 * n * s * (w + 4 * d + s),
        n=2 * d * s * (w + 2 * d + s) + h * s * s,
        w=2 * d * n * s,
        h=n * s * s,
        s=2 * v * d + 2 * d * n * (w + 2 * d + 2 * s) + 2 * n * h * s,
    )


def accounting_gradients(shape: TransformerShape, kind: str) -> CostGradient:
    """Exact partial derivatives of one count at the given shape.

    The counts are polynomials in (d, n, w, h, s), so the derivatives
    are closed-form; nothing here is a finite difference.
    """
    d, n, s, v, w, h = shape.astuple()
    if kind == "params":
        return params_gradient(d, n, v, w)
    if kind == "memcpys":
        return memcpys_gradient(d, n, s, v, w, h)
    if kind == "flops":
        return flops_gradient(d, n, s, v, w, h)
    raise ValidationError(f"unknown count kind {kind!r}; expected one of {COUNT_KINDS}")


def _params_components(shape: TransformerShape):
    d, n, _, v, w, _ = shape.astuple()
    per_layer = [
        ("Q, K and V projections", 3 * (d * d + d)),
        ("layer norms around the attention", 4 * d),
        ("projection recombining the heads", d * d + d),
        ("MLP matrices and biases", 2 * d * w + d + w),
    ]
    rows = [(label, n * val) for label, val in per_layer]
    rows.append(("final layer norm", 2 * d))
    rows.append(("tied token embedding", v * d))
    return rows


def _memcpys_components(shape: TransformerShape):
    d, n, s, v, w, h = shape.astuple()
    head = d // h
    per_layer = [
        ("produce Q, K and V", 3 * (s * d + d * d)),
        ("compute QK^T", h * (s * head + s * head)),
        ("apply softmax", h * s * s),
        ("multiply by V", h * (s * s + s * head)),
        ("projection recombining the heads", s * d + d * d),
        ("the two MLP layers", s * d + d * w + s * w + w * d),
    ]
    rows = [(label, n * val) for label, val in per_layer]
    rows.append(("input and output embeddings", 2 * (v * d + s * v)))
    return rows


def _flops_components(shape: TransformerShape):
    d, n, s, v, w, h = shape.astuple()
    head = d // h
    per_layer = [
        ("produce Q, K and V", 3 * s * d * d),
        ("compute QK^T", h * s * s * head),
        ("apply softmax", h * s * s),
        ("multiply by V", h * s * s * head),
        ("projection recombining the heads", s * d * d),
        ("the two MLP layers", s * d * w + s * w * d),
    ]
    rows = [(label, n * val) for label, val in per_layer]
    rows.append(("input and output embeddings", 2 * s * v * d))
    return rows


def itemized_breakdown(shape: TransformerShape, kind: str) -> CostBreakdown:
    """Per-component cost table for one count kind.

    Per-layer components are already multiplied by ``n``.  For
    ``memcpys`` and ``flops`` the component total equals the closed
    form exactly.  The ``params`` table exceeds the closed form by
    exactly ``n*d + 2*d``: summing the per-layer biases and norm
    parameters gives ``9*d`` per layer where the closed form carries
    ``8*d``, and the final layer norm (``2*d``) has no closed-form
    term at all.  The component-faithful view is kept; the discrepancy
    is documented rather than papered over.
    """
    if kind == "params":
        rows = _params_components(shape)
    elif kind == "memcpys":
        rows = _memcpys_components(shape)
    elif kind == "flops":
        rows = _flops_components(shape)
    else:
        raise ValidationError(
            f"unknown count kind {kind!r}; expected one of {COUNT_KINDS}"
        )
    total = sum(val for _, val in rows)
    return CostBreakdown(kind=kind, components=tuple(rows), total=total)

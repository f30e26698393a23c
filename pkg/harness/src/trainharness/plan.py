"""Measurement plans: which shapes to train, for how long, on what device.

A plan travels as a JSON document in the same style as a coefficient
bundle: one object with explicit fields, unknown fields tolerated with
a warning so old tools can read new files. Example:

    {
      "shapes": [
        {"d": 64, "n": 2, "s": 64, "v": 512, "w": 256, "h": 2},
        {"d": 128, "n": 2, "s": 64, "v": 512, "w": 512, "h": 4}
      ],
      "batch": 4,
      "seconds_per_run": 300,
      "warmup_steps": 2,
      "device": "cpu",
      "out": "runs.csv"
    }
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import PlanError

DEFAULT_SECONDS_PER_RUN = 300.0
DEFAULT_WARMUP_STEPS = 2

_SHAPE_FIELDS = ("d", "n", "s", "v", "w", "h")
_PLAN_FIELDS = (
    "shapes",
    "batch",
    "seconds_per_run",
    "warmup_steps",
    "device",
    "seed",
    "out",
)


@dataclass(frozen=True)
class PlannedShape:
    """One transformer shape to measure.

    d: embedding width, n: layers, s: sequence length, v: vocabulary
    size, w: MLP hidden width, h: attention heads.
    """

    d: int
    n: int
    s: int
    v: int
    w: int
    h: int

    def __post_init__(self):
        for name in _SHAPE_FIELDS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise PlanError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise PlanError(f"{name} must be positive, got {value}")
        if self.d % self.h:
            raise PlanError(
                f"d={self.d} is not divisible by h={self.h}; heads must tile the width"
            )
        if self.s < 2:
            raise PlanError(
                "s must be at least 2: next-token loss needs a position to predict"
            )

    def describe(self) -> str:
        return f"d={self.d} n={self.n} s={self.s} v={self.v} w={self.w} h={self.h}"


@dataclass(frozen=True)
class MeasurementPlan:
    """Everything `measure` needs: shapes plus run-length and device knobs.

    Each shape trains for `seconds_per_run` of wall clock (never fewer
    than warmup_steps + 1 steps, so a median always exists). The first
    `warmup_steps` steps are excluded from timing because they pay
    one-time graph construction and allocator costs.
    """

    shapes: tuple[PlannedShape, ...]
    batch: int = 1
    seconds_per_run: float = DEFAULT_SECONDS_PER_RUN
    warmup_steps: int = DEFAULT_WARMUP_STEPS
    device: str = "cpu"
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.shapes:
            raise PlanError("plan contains no shapes")
        if isinstance(self.batch, bool) or not isinstance(self.batch, int):
            raise PlanError(f"batch must be an integer, got {self.batch!r}")
        if self.batch < 1:
            raise PlanError(f"batch must be positive, got {self.batch}")
        try:
            object.__setattr__(self, "seconds_per_run", float(self.seconds_per_run))
        except (TypeError, ValueError):
            raise PlanError(
                f"seconds_per_run must be a number, got {self.seconds_per_run!r}"
            ) from None
        if not self.seconds_per_run > 0:
            raise PlanError(f"seconds_per_run must be positive, got {self.seconds_per_run}")
        if isinstance(self.warmup_steps, bool) or not isinstance(self.warmup_steps, int):
            raise PlanError(f"warmup_steps must be an integer, got {self.warmup_steps!r}")
        if self.warmup_steps < 1:
            raise PlanError("warmup_steps must be at least 1 (the first step is never timed)")
        if not isinstance(self.device, str) or not self.device:
            raise PlanError(f"device must be a nonempty string, got {self.device!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise PlanError(f"seed must be an integer, got {self.seed!r}")


def load_plan(path: str | Path) -> MeasurementPlan:
    """Read a plan JSON file, naming the file and field on any problem."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PlanError(
            f"{path}: not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise PlanError(f"{path}: top level must be a JSON object")

    unknown = set(doc) - set(_PLAN_FIELDS)
    if unknown:
        warnings.warn(
            f"{path}: ignoring unknown field(s): {', '.join(sorted(unknown))}",
            UserWarning,
            stacklevel=2,
        )
    if "shapes" not in doc:
        raise PlanError(f"{path}: missing field: shapes")
    raw_shapes = doc["shapes"]
    if not isinstance(raw_shapes, list):
        raise PlanError(f"{path}: shapes must be a list")

    shapes = []
    for i, entry in enumerate(raw_shapes):
        where = f"{path}: shapes[{i}]"
        if not isinstance(entry, dict):
            raise PlanError(f"{where}: each shape must be an object")
        missing = [f for f in _SHAPE_FIELDS if f not in entry]
        if missing:
            raise PlanError(f"{where}: missing field(s): {', '.join(missing)}")
        extra = set(entry) - set(_SHAPE_FIELDS)
        if extra:
            warnings.warn(
                f"{where}: ignoring unknown field(s): {', '.join(sorted(extra))}",
                UserWarning,
                stacklevel=2,
            )
        try:
            shapes.append(PlannedShape(**{f: entry[f] for f in _SHAPE_FIELDS}))
        except PlanError as exc:
            raise PlanError(f"{where}: {exc}") from None

    kwargs = {}
    for name in ("batch", "seconds_per_run", "warmup_steps", "device", "seed", "out"):
        if name in doc and doc[name] is not None:
            kwargs[name] = doc[name]
    try:
        return MeasurementPlan(shapes=tuple(shapes), **kwargs)
    except PlanError as exc:
        raise PlanError(f"{path}: {exc}") from None

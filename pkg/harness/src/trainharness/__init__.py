"""Real step-time measurement for tiny decoder-only transformers.

Reads a JSON measurement plan, trains each shape on synthetic token
streams for a fixed wall-clock interval, and writes a run CSV whose
schema matches the cost-model fitting tools.
"""

from .errors import HarnessError, MeasurementError, PlanError
from .measure import (
    CSV_HEADER,
    LEARNING_RATE,
    MeasuredRun,
    measure,
    provenance_path,
    summarize_steps,
)
from .model import DecoderBlock, TinyDecoder
from .plan import (
    DEFAULT_SECONDS_PER_RUN,
    DEFAULT_WARMUP_STEPS,
    MeasurementPlan,
    PlannedShape,
    load_plan,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "DEFAULT_SECONDS_PER_RUN",
    "DEFAULT_WARMUP_STEPS",
    "DecoderBlock",
    "HarnessError",
    "LEARNING_RATE",
    "MeasuredRun",
    "MeasurementError",
    "MeasurementPlan",
    "PlanError",
    "PlannedShape",
    "TinyDecoder",
    "load_plan",
    "measure",
    "provenance_path",
    "summarize_steps",
]

"""Timed training runs that emit a run CSV for cost-model fitting.

Each planned shape is trained on uniform random token streams for the
plan's wall-clock interval. `seconds_per_step` is the median over
post-warmup steps (the median resists stragglers; warmup pays one-time
costs), and `tokens_per_second` is derived from the same median so the
two columns are exactly consistent with `batch * s`.

The CSV header below is the interface contract with downstream fitting
tools. It is reproduced verbatim rather than imported so this package
stands alone; change it only in lockstep with its consumers.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
import statistics
import time
from dataclasses import dataclass, replace
from pathlib import Path

import torch

from .errors import MeasurementError, PlanError
from .model import EMBED_INIT_STD, TinyDecoder
from .plan import MeasurementPlan, PlannedShape

CSV_HEADER = (
    "run_id",
    "d",
    "n",
    "s",
    "v",
    "w",
    "h",
    "batch",
    "seconds_per_step",
    "tokens_per_second",
    "tokens_seen",
    "final_loss",
    "train_seconds",
)

OPTIMIZER_NAME = "AdamW"
LEARNING_RATE = 3e-4

log = logging.getLogger("trainharness")


@dataclass(frozen=True)
class MeasuredRun:
    """One CSV row's worth of measurement."""

    run_id: str
    shape: PlannedShape
    batch: int
    seconds_per_step: float
    tokens_per_second: float
    tokens_seen: int
    final_loss: float
    train_seconds: float


def summarize_steps(durations, warmup_steps: int) -> float:
    """Median of the post-warmup step durations.

    Raises MeasurementError when nothing survives the warmup cut, which
    means seconds_per_run was too short for the shape.
    """
    if len(durations) <= warmup_steps:
        raise MeasurementError(
            f"recorded {len(durations)} step(s) but warmup excludes the first "
            f"{warmup_steps}; lengthen seconds_per_run"
        )
    return statistics.median(durations[warmup_steps:])


def _train_one(shape: PlannedShape, plan: MeasurementPlan, index: int) -> MeasuredRun:
    torch.manual_seed(plan.seed * 100_003 + index)
    device = torch.device(plan.device)
    model = TinyDecoder(shape.d, shape.n, shape.s, shape.v, shape.w, shape.h).to(device)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=LEARNING_RATE)

    durations: list[float] = []
    loss = None
    started = time.perf_counter()
    while True:
        tokens = torch.randint(0, shape.v, (plan.batch, shape.s), device=device)
        step_start = time.perf_counter()
        logits = model(tokens)
        loss = torch.nn.functional.cross_entropy(
            logits[:, :-1].reshape(-1, shape.v), tokens[:, 1:].reshape(-1)
        )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        durations.append(time.perf_counter() - step_start)
        enough_steps = len(durations) > plan.warmup_steps
        out_of_time = time.perf_counter() - started >= plan.seconds_per_run
        if enough_steps and out_of_time:
            break
    train_seconds = time.perf_counter() - started

    seconds_per_step = summarize_steps(durations, plan.warmup_steps)
    tokens_per_step = plan.batch * shape.s
    return MeasuredRun(
        run_id=f"{plan.device}-{index:03d}-d{shape.d}n{shape.n}s{shape.s}"
        f"v{shape.v}w{shape.w}h{shape.h}",
        shape=shape,
        batch=plan.batch,
        seconds_per_step=seconds_per_step,
        tokens_per_second=tokens_per_step / seconds_per_step,
        tokens_seen=len(durations) * tokens_per_step,
        final_loss=float(loss.detach()),
        train_seconds=train_seconds,
    )


def _looks_like_oom(exc: BaseException) -> bool:
    # torch surfaces allocator failures as RuntimeError subclasses whose
    # message contains "out of memory" on every backend.
    if isinstance(exc, MemoryError):
        return True
    return isinstance(exc, RuntimeError) and "out of memory" in str(exc).lower()


def _write_csv(path: Path, rows: list[MeasuredRun]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for row in rows:
            shape = row.shape
            writer.writerow(
                [
                    row.run_id,
                    shape.d,
                    shape.n,
                    shape.s,
                    shape.v,
                    shape.w,
                    shape.h,
                    row.batch,
                    repr(row.seconds_per_step),
                    repr(row.tokens_per_second),
                    repr(float(row.tokens_seen)),
                    repr(row.final_loss),
                    repr(row.train_seconds),
                ]
            )


def provenance_path(csv_path: str | Path) -> Path:
    """Where measure() records its training choices for a given CSV."""
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".provenance.json")


def _write_provenance(csv_path: Path, plan: MeasurementPlan, emitted: int) -> None:
    doc = {
        "device": plan.device,
        "optimizer": OPTIMIZER_NAME,
        "learning_rate": LEARNING_RATE,
        "embedding_init_std": EMBED_INIT_STD,
        "activation": "relu",
        "data": "uniform random tokens",
        "batch": plan.batch,
        "seconds_per_run": plan.seconds_per_run,
        "warmup_steps": plan.warmup_steps,
        "seed": plan.seed,
        "timing": (
            "seconds_per_step is the median over post-warmup steps; "
            "tokens_per_second is batch*s divided by that median"
        ),
        "torch": torch.__version__,
        "rows": emitted,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    provenance_path(csv_path).write_text(json.dumps(doc, indent=2) + "\n")


def measure(plan: MeasurementPlan, out: str | Path | None = None) -> Path:
    """Run every shape in the plan and write the run CSV.

    Out-of-memory shapes are skipped with an error log line and the
    sweep continues; any other failure propagates. Training choices
    (optimizer, learning rate, init, data) land in a provenance JSON
    next to the CSV. Returns the CSV path.
    """
    target = out if out is not None else plan.out
    if target is None:
        raise PlanError("no output path: set plan.out or pass out=")
    target = Path(target)

    rows: list[MeasuredRun] = []
    for index, shape in enumerate(plan.shapes):
        log.info(
            "measuring %d/%d (%s) for %.3gs on %s",
            index + 1,
            len(plan.shapes),
            shape.describe(),
            plan.seconds_per_run,
            plan.device,
        )
        try:
            run = _train_one(shape, plan, index)
        except Exception as exc:
            if _looks_like_oom(exc):
                log.error("skipping shape (%s): out of memory: %s", shape.describe(), exc)
                continue
            raise
        log.info(
            "  %s: %.3g s/step, %.4g tokens/s over %d steps",
            run.run_id,
            run.seconds_per_step,
            run.tokens_per_second,
            run.tokens_seen // (plan.batch * shape.s),
        )
        rows.append(run)

    if not rows:
        raise MeasurementError("every shape in the plan failed; no CSV written")
    _write_csv(target, rows)
    _write_provenance(target, plan, len(rows))
    return target


def with_overrides(
    plan: MeasurementPlan,
    seconds_per_run: float | None = None,
    device: str | None = None,
) -> MeasurementPlan:
    """Copy of the plan with CLI-style overrides applied."""
    updates = {}
    if seconds_per_run is not None:
        updates["seconds_per_run"] = seconds_per_run
    if device is not None:
        updates["device"] = device
    return replace(plan, **updates) if updates else plan

"""Run-record CSV handling and coefficient bundle serialization.

The run CSV schema, in column order:

    run_id,d,n,s,v,w,h,batch,seconds_per_step,tokens_per_second,
    tokens_seen,final_loss,train_seconds

``run_id`` is a free-form unique string; the six shape columns are
integers; the remaining columns are optional floats (empty cell means
absent).  A file without the ``batch`` column is accepted with batch
defaulting to 1, but loudly, since a wrong batch silently corrupts
every token-level quantity downstream.

Coefficient bundles are JSON documents carrying a fitted step-time
model, a fitted loss law, the training budget they were fit under, and
provenance (dataset hash, timestamp).  Floats survive a save/load
round trip bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .accounting import TransformerShape
from .errors import BundleFormatError, DomainError, RowError, SchemaError, ValidationError
from .regress import FitReport
from .scaling import ScalingLaw, TrainBudget
from .throughput import TimeCoefficients

CSV_COLUMNS = (
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

SPLIT_TAGS = ("train", "holdout", "unassigned")

# Relative disagreement tolerated between seconds_per_step and
# tokens_per_second when a row carries both.
TIMING_CONSISTENCY_RTOL = 0.01


@dataclass(frozen=True)
class RunRecord:
    """One training run: a shape plus whatever was measured for it."""

    run_id: str
    shape: TransformerShape
    batch: int = 1
    seconds_per_step: float | None = None
    tokens_per_second: float | None = None
    tokens_seen: float | None = None
    final_loss: float | None = None
    train_seconds: float | None = None

    def __post_init__(self) -> None:
        if not self.run_id:
            raise ValidationError("run_id must be a non-empty string")
        if self.batch < 1:
            raise ValidationError(f"batch must be >= 1, got {self.batch}")
        for name in ("seconds_per_step", "tokens_per_second", "train_seconds"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"{name} must be positive and finite, got {val!r}")
        for name in ("tokens_seen", "final_loss"):
            val = getattr(self, name)
            if val is not None and not math.isfinite(val):
                raise ValidationError(f"{name} must be finite, got {val!r}")
        if self.tokens_seen is not None and self.tokens_seen <= 0.0:
            raise ValidationError(f"tokens_seen must be positive, got {self.tokens_seen!r}")
        if self.seconds_per_step is not None and self.tokens_per_second is not None:
            implied = self.batch * self.shape.s / self.seconds_per_step
            if abs(implied - self.tokens_per_second) > TIMING_CONSISTENCY_RTOL * implied:
                raise ValidationError(
                    f"run {self.run_id}: tokens_per_second "
                    f"({self.tokens_per_second:.6g}) disagrees with "
                    f"batch*s/seconds_per_step ({implied:.6g}) by more than "
                    f"{TIMING_CONSISTENCY_RTOL:.0%}"
                )


@dataclass(frozen=True)
class RunDataset:
    """An ordered collection of runs with a per-run split tag."""

    records: tuple[RunRecord, ...]
    split: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        records = tuple(self.records)
        split = tuple(self.split) if self.split else ("unassigned",) * len(records)
        if len(split) != len(records):
            raise ValidationError(
                f"split has {len(split)} tags for {len(records)} records"
            )
        for tag in split:
            if tag not in SPLIT_TAGS:
                raise ValidationError(
                    f"unknown split tag {tag!r}; expected one of {SPLIT_TAGS}"
                )
        seen = set()
        for r in records:
            if r.run_id in seen:
                raise ValidationError(f"duplicate run_id {r.run_id!r}")
            seen.add(r.run_id)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "split", split)

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, tag: str) -> tuple[RunRecord, ...]:
        return tuple(r for r, t in zip(self.records, self.split) if t == tag)


def _parse_optional_float(text: str, column: str, line_num: int) -> float | None:
    text = text.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise RowError(
            f"line {line_num}: column {column} is not a number: {text!r}"
        ) from None


def _parse_int(text: str, column: str, line_num: int) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        raise RowError(
            f"line {line_num}: column {column} is not an integer: {text!r}"
        ) from None


def load_runs(path: str | Path) -> RunDataset:
    """Read a run CSV into a dataset with every run unassigned.

    Raises SchemaError if a required column is missing and RowError
    (with the line number) on the first malformed row.  Extra columns
    are ignored.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: file is empty, expected a CSV header")
        header = [name.strip() for name in reader.fieldnames]
        missing = [c for c in CSV_COLUMNS if c != "batch" and c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(missing)}")
        has_batch = "batch" in header
        if not has_batch:
            warnings.warn(
                f"{path}: no batch column; assuming batch=1 for every run. "
                "Token-level quantities are wrong if that is not true.",
                UserWarning,
                stacklevel=2,
            )
        needed = [c for c in CSV_COLUMNS if c in header]
        records = []
        for row in reader:
            line = reader.line_num
            if any(row.get(c) is None for c in needed):
                raise RowError(f"line {line}: wrong number of fields")
            try:
                shape = TransformerShape(
                    d=_parse_int(row["d"], "d", line),
                    n=_parse_int(row["n"], "n", line),
                    s=_parse_int(row["s"], "s", line),
                    v=_parse_int(row["v"], "v", line),
                    w=_parse_int(row["w"], "w", line),
                    h=_parse_int(row["h"], "h", line),
                )
                record = RunRecord(
                    run_id=row["run_id"].strip(),
                    shape=shape,
                    batch=_parse_int(row["batch"], "batch", line) if has_batch else 1,
                    seconds_per_step=_parse_optional_float(
                        row["seconds_per_step"], "seconds_per_step", line
                    ),
                    tokens_per_second=_parse_optional_float(
                        row["tokens_per_second"], "tokens_per_second", line
                    ),
                    tokens_seen=_parse_optional_float(row["tokens_seen"], "tokens_seen", line),
                    final_loss=_parse_optional_float(row["final_loss"], "final_loss", line),
                    train_seconds=_parse_optional_float(
                        row["train_seconds"], "train_seconds", line
                    ),
                )
            except RowError:
                raise
            except ValidationError as exc:
                raise RowError(f"line {line}: {exc}") from None
            records.append(record)
    return RunDataset(records=tuple(records))


def write_runs(dataset: RunDataset, fh) -> None:
    """Write a dataset in the full CSV schema to an open text stream."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in dataset.records:
        d, n, s, v, w, h = r.shape.astuple()
        writer.writerow(
            [
                r.run_id,
                d,
                n,
                s,
                v,
                w,
                h,
                r.batch,
                _format_optional(r.seconds_per_step),
                _format_optional(r.tokens_per_second),
                _format_optional(r.tokens_seen),
                _format_optional(r.final_loss),
                _format_optional(r.train_seconds),
            ]
        )


def save_runs(dataset: RunDataset, path: str | Path) -> None:
    """Write a dataset back out in the full CSV schema."""
    with Path(path).open("w", newline="") as fh:
        write_runs(dataset, fh)


def _format_optional(val: float | None) -> str:
    return "" if val is None else repr(float(val))


def split_dataset(dataset: RunDataset, holdout_fraction: float, seed: int) -> RunDataset:
    """Deterministically tag runs as train or holdout.

    The holdout gets round(holdout_fraction * len) runs chosen by a
    seeded permutation; record order is unchanged.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise DomainError(
            f"holdout_fraction must lie in (0, 1), got {holdout_fraction!r}"
        )
    n = len(dataset)
    if n < 2:
        raise ValidationError(f"need at least 2 runs to split, got {n}")
    k = int(round(holdout_fraction * n))
    k = min(max(k, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    holdout_idx = set(int(i) for i in perm[:k])
    tags = tuple("holdout" if i in holdout_idx else "train" for i in range(n))
    return replace(dataset, split=tags)


@dataclass(frozen=True)
class CoefficientBundle:
    """Fitted models plus the context needed to reuse them honestly."""

    time: TimeCoefficients | None = None
    law: ScalingLaw | None = None
    budget: TrainBudget | None = None
    provenance: dict[str, Any] = field(default_factory=dict)


def dataset_sha256(path: str | Path) -> str:
    """Hex digest of a dataset file, for bundle provenance."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fit_report_to_json(report: FitReport | None):
    if report is None:
        return None
    return {
        "slope": report.slope,
        "intercept": report.intercept,
        "r2_pearson": report.r2_pearson,
        "r2_raw": report.r2_raw,
    }


def _fit_report_from_json(obj, where: str) -> FitReport | None:
    if obj is None:
        return None
    try:
        return FitReport(
            slope=float(obj["slope"]),
            intercept=float(obj["intercept"]),
            r2_pearson=float(obj["r2_pearson"]),
            r2_raw=float(obj["r2_raw"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"{where}: malformed fit report: {exc}") from None


def save_coefficients(bundle: CoefficientBundle, path: str | Path) -> None:
    """Write a bundle as JSON; floats round-trip bit-exactly."""
    doc: dict[str, Any] = {}
    if bundle.time is not None:
        doc["time"] = {
            "c1": bundle.time.c1,
            "c2": bundle.time.c2,
            "c3": bundle.time.c3,
            "mode": bundle.time.mode,
            "fit_r2": _fit_report_to_json(bundle.time.fit_r2),
            "notes": list(bundle.time.notes),
        }
    if bundle.law is not None:
        doc["law"] = {
            "A": bundle.law.A,
            "B": bundle.law.B,
            "E": bundle.law.E,
            "alpha": bundle.law.alpha,
            "beta": bundle.law.beta,
            "fit_r2": _fit_report_to_json(bundle.law.fit_r2),
            "notes": list(bundle.law.notes),
        }
    if bundle.budget is not None:
        doc["budget"] = {
            "T": bundle.budget.T,
            "batch": bundle.budget.batch,
            "token_mode": bundle.budget.token_mode,
        }
    doc["provenance"] = dict(bundle.provenance)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise BundleFormatError(f"{where}: missing field: {key}")
    return obj[key]


def _float_field(obj: dict, key: str, where: str) -> float:
    val = _require(obj, key, where)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise BundleFormatError(f"{where}: field {key} must be a number, got {val!r}")
    return float(val)


def _warn_unknown(obj: dict, known: tuple[str, ...], where: str) -> None:
    extras = [k for k in obj if k not in known]
    if extras:
        warnings.warn(
            f"{where}: ignoring unknown field(s): {', '.join(sorted(extras))}",
            UserWarning,
            stacklevel=3,
        )


def load_coefficients(path: str | Path) -> CoefficientBundle:
    """Read a bundle, tolerating unknown fields with a warning.

    Missing required fields or malformed JSON raise BundleFormatError
    with the file location in the message.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleFormatError(
            f"{path}: not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise BundleFormatError(f"{path}: top level must be a JSON object")
    _warn_unknown(doc, ("time", "law", "budget", "provenance"), str(path))

    time = None
    if "time" in doc and doc["time"] is not None:
        obj = doc["time"]
        where = f"{path}: time"
        _warn_unknown(obj, ("c1", "c2", "c3", "mode", "fit_r2", "notes"), where)
        try:
            time = TimeCoefficients(
                c1=_float_field(obj, "c1", where),
                c2=_float_field(obj, "c2", where),
                c3=_float_field(obj, "c3", where),
                mode=obj.get("mode", "both"),
                fit_r2=_fit_report_from_json(obj.get("fit_r2"), where),
                notes=tuple(obj.get("notes", ())),
            )
        except ValidationError as exc:
            raise BundleFormatError(f"{where}: {exc}") from None

    law = None
    if "law" in doc and doc["law"] is not None:
        obj = doc["law"]
        where = f"{path}: law"
        _warn_unknown(obj, ("A", "B", "E", "alpha", "beta", "fit_r2", "notes"), where)
        try:
            law = ScalingLaw(
                A=_float_field(obj, "A", where),
                B=_float_field(obj, "B", where),
                E=_float_field(obj, "E", where),
                alpha=_float_field(obj, "alpha", where),
                beta=_float_field(obj, "beta", where),
                fit_r2=_fit_report_from_json(obj.get("fit_r2"), where),
                notes=tuple(obj.get("notes", ())),
            )
        except ValidationError as exc:
            raise BundleFormatError(f"{where}: {exc}") from None

    budget = None
    if "budget" in doc and doc["budget"] is not None:
        obj = doc["budget"]
        where = f"{path}: budget"
        _warn_unknown(obj, ("T", "batch", "token_mode"), where)
        try:
            budget = TrainBudget(
                T=_float_field(obj, "T", where),
                batch=int(_require(obj, "batch", where)),
                token_mode=_require(obj, "token_mode", where),
            )
        except (ValidationError, TypeError, ValueError) as exc:
            raise BundleFormatError(f"{where}: {exc}") from None

    provenance = doc.get("provenance", {})
    if not isinstance(provenance, dict):
        raise BundleFormatError(f"{path}: provenance must be a JSON object")
    return CoefficientBundle(time=time, law=law, budget=budget, provenance=provenance)

"""Synthetic sweep generation for exercising the fitting pipeline.

Shapes are drawn log-uniformly (powers of two) from configurable
exponent ranges, step times come from a ground-truth time model, and
losses from a ground-truth loss law evaluated at the data quantity the
noiseless timing implies.  Multiplicative lognormal noise exp(sigma*z)
is applied to the observed step time and loss; sigma = 0 reproduces
the model values bit-exactly.

Each record gets its own RNG substream keyed by (seed, index), so
record i is identical no matter how many records are generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accounting import TransformerShape, count_params
from .dataio import RunDataset, RunRecord
from .errors import GenerationError, ValidationError
from .scaling import ScalingLaw, TrainBudget, chinchilla_loss
from .throughput import TimeCoefficients, predict_step_time

# Exponent bounds (inclusive, base 2) mirroring the hardware sweep the
# default calibrated ranges come from.
DEFAULT_RANGES = {"d": (5, 12), "n": (0, 3), "w": (8, 15), "h": (0, 7)}


@dataclass(frozen=True)
class SweepSpec:
    """Recipe for one synthetic sweep."""

    samples: int
    seed: int
    true_time: TimeCoefficients
    true_law: ScalingLaw
    budget: TrainBudget
    noise_sigma: float = 0.0
    d_log2: tuple[int, int] = DEFAULT_RANGES["d"]
    n_log2: tuple[int, int] = DEFAULT_RANGES["n"]
    w_log2: tuple[int, int] = DEFAULT_RANGES["w"]
    h_log2: tuple[int, int] = DEFAULT_RANGES["h"]
    s: int = 512
    v: int = 8000

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValidationError(f"samples must be >= 1, got {self.samples}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        for name in ("d_log2", "n_log2", "w_log2", "h_log2"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValidationError(
                    f"{name} must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
                )
        if self.s < 1 or self.v < 1:
            raise ValidationError(f"s and v must be >= 1, got s={self.s}, v={self.v}")


def _sample_shape(spec: SweepSpec, rng: np.random.Generator) -> TransformerShape:
    # h must divide d; with powers of two that means exponent(h) <=
    # exponent(d), so resampling terminates quickly unless the ranges
    # are disjoint in the wrong direction.
    for _ in range(1000):
        d_exp = int(rng.integers(spec.d_log2[0], spec.d_log2[1] + 1))
        h_exp = int(rng.integers(spec.h_log2[0], spec.h_log2[1] + 1))
        if h_exp <= d_exp:
            break
    else:
        raise GenerationError(
            f"no valid (d, h) pair with d in 2^{spec.d_log2} and h in "
            f"2^{spec.h_log2}; every sampled h exceeded d"
        )
    n_exp = int(rng.integers(spec.n_log2[0], spec.n_log2[1] + 1))
    w_exp = int(rng.integers(spec.w_log2[0], spec.w_log2[1] + 1))
    return TransformerShape(
        d=2**d_exp, n=2**n_exp, s=spec.s, v=spec.v, w=2**w_exp, h=2**h_exp
    )


def generate_runs(spec: SweepSpec) -> RunDataset:
    """Generate a reproducible synthetic run dataset."""
    if spec.h_log2[0] > spec.d_log2[1]:
        raise GenerationError(
            f"ranges admit no valid shape: smallest h = 2^{spec.h_log2[0]} "
            f"exceeds largest d = 2^{spec.d_log2[1]}"
        )
    records = []
    for i in range(spec.samples):
        rng = np.random.default_rng((spec.seed, i))
        shape = _sample_shape(spec, rng)
        t_true = predict_step_time(shape, spec.true_time)
        z_time, z_loss = rng.standard_normal(2)
        # Noise perturbs the realized step time; the data volume follows
        # from it (a run with slower steps completes fewer of them), and
        # the loss gets its own multiplicative noise on top.
        t_obs = t_true * math.exp(spec.noise_sigma * z_time)
        steps_obs = spec.budget.T / t_obs
        tokens_mode = spec.budget.token_mode == "tokens"
        data_obs = steps_obs * spec.budget.batch * spec.s if tokens_mode else steps_obs
        loss_obs = chinchilla_loss(count_params(shape), data_obs, spec.true_law) * math.exp(
            spec.noise_sigma * z_loss
        )
        records.append(
            RunRecord(
                run_id=f"synth-{i:05d}",
                shape=shape,
                batch=spec.budget.batch,
                seconds_per_step=t_obs,
                tokens_per_second=spec.budget.batch * spec.s / t_obs,
                # tokens_seen is only written in tokens mode so that a
                # steps-mode fit derives its data axis from the timing
                # columns in the same units the losses were produced in.
                tokens_seen=data_obs if tokens_mode else None,
                final_loss=loss_obs,
                train_seconds=spec.budget.T,
            )
        )
    return RunDataset(records=tuple(records))

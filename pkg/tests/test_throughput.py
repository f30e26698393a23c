"""Step-time model tests."""

import numpy as np
import pytest

from traintime import (
    NonphysicalTimeError,
    RunDataset,
    RunRecord,
    SweepSpec,
    TimeCoefficients,
    TransformerShape,
    ValidationError,
    count_flops,
    count_memcpys,
    fit_time_coefficients,
    generate_runs,
    predict_step_time,
    split_dataset,
    throughput,
)
from tests.conftest import BALANCED_TIME, REFERENCE_LAW, THREE_HOURS

from traintime import ScalingLaw, TrainBudget

def _unit_shape():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return TransformerShape(d=1, n=1, s=1, v=1, w=1, h=1)


def _balanced_spec(samples, seed, sigma=0.0):
    return SweepSpec(
        samples=samples,
        seed=seed,
        noise_sigma=sigma,
        true_time=TimeCoefficients(**BALANCED_TIME),
        true_law=ScalingLaw(**REFERENCE_LAW),
        budget=TrainBudget(T=THREE_HOURS, batch=1, token_mode="steps"),
    )


def test_unit_shape_with_unit_coefficients():
    # 21 element moves + 11 MACs, no overhead.
    coeffs = TimeCoefficients(c1=1.0, c2=1.0, c3=0.0)
    assert predict_step_time(_unit_shape(), coeffs) == 32.0


def test_overhead_only_model_is_constant():
    coeffs = TimeCoefficients(c1=0.0, c2=0.0, c3=0.25)
    small = TransformerShape(d=32, n=1, s=64, v=500, w=256, h=1)
    large = TransformerShape(d=1024, n=8, s=512, v=8000, w=8192, h=16)
    assert predict_step_time(small, coeffs) == 0.25
    assert predict_step_time(large, coeffs) == 0.25


def test_reference_point_arithmetic():
    # Value frozen from the closed-form counts of this shape
    # (12,697,600 moves and 345,505,792 MACs).
    coeffs = TimeCoefficients(c1=3.74e-19, c2=2.4e-15, c3=1.46e-7)
    shape = TransformerShape(d=32, n=3, s=512, v=8000, w=256, h=2)
    expected = 3.74e-19 * 12_697_600 + 2.4e-15 * 345_505_792 + 1.46e-7
    got = predict_step_time(shape, coeffs)
    assert got == pytest.approx(expected, rel=1e-15)
    assert got == pytest.approx(9.752186497024e-07, rel=1e-12)


def test_nonpositive_time_is_rejected():
    shape = TransformerShape(d=32, n=3, s=512, v=8000, w=256, h=2)
    with pytest.raises(NonphysicalTimeError):
        predict_step_time(shape, TimeCoefficients(c1=0.0, c2=0.0, c3=0.0))
    with pytest.raises(NonphysicalTimeError):
        predict_step_time(shape, TimeCoefficients(c1=0.0, c2=-1e-15, c3=1e-7))


def test_time_is_monotone_in_every_hyperparameter():
    coeffs = TimeCoefficients(c1=1e-12, c2=1e-15, c3=1e-4)
    base = dict(d=64, n=2, s=128, v=500, w=512, h=4)
    t0 = predict_step_time(TransformerShape(**base), coeffs)
    for field, new_val in dict(d=128, n=3, s=256, v=600, w=1024, h=8).items():
        changed = dict(base)
        changed[field] = new_val
        assert predict_step_time(TransformerShape(**changed), coeffs) > t0, field


def test_throughput_is_tokens_over_time():
    coeffs = TimeCoefficients(c1=0.0, c2=0.0, c3=0.5)
    shape = TransformerShape(d=64, n=2, s=128, v=500, w=512, h=4)
    assert throughput(shape, coeffs) == 128 / 0.5
    assert throughput(shape, coeffs, batch=8) == 8 * 128 / 0.5
    with pytest.raises(ValidationError):
        throughput(shape, coeffs, batch=0)


def test_mode_constraints_on_construction():
    with pytest.raises(ValidationError):
        TimeCoefficients(c1=1.0, c2=1.0, c3=0.0, mode="memcpy_only")
    with pytest.raises(ValidationError):
        TimeCoefficients(c1=1.0, c2=1.0, c3=0.0, mode="flops_only")
    with pytest.raises(ValidationError):
        TimeCoefficients(c1=1.0, c2=1.0, c3=0.0, mode="best_of_both")


def test_fit_recovers_truth_on_noiseless_synthetic_runs():
    dataset = generate_runs(_balanced_spec(samples=200, seed=11))
    fitted = fit_time_coefficients(dataset)
    truth = BALANCED_TIME
    assert fitted.c1 == pytest.approx(truth["c1"], rel=1e-9)
    assert fitted.c2 == pytest.approx(truth["c2"], rel=1e-9)
    assert fitted.c3 == pytest.approx(truth["c3"], rel=1e-9)
    assert fitted.mode == "both"
    assert fitted.notes == ()
    assert fitted.fit_r2 is None  # nothing was held out


def test_fit_scores_holdout_when_split():
    dataset = split_dataset(generate_runs(_balanced_spec(samples=200, seed=12)), 0.5, seed=0)
    fitted = fit_time_coefficients(dataset)
    assert fitted.fit_r2 is not None
    assert fitted.fit_r2.r2_pearson == pytest.approx(1.0, abs=1e-9)
    assert fitted.fit_r2.slope == pytest.approx(1.0, rel=1e-9)


def test_fit_accepts_tokens_per_second_rows():
    dataset = generate_runs(_balanced_spec(samples=60, seed=13))
    stripped = []
    for i, r in enumerate(dataset.records):
        if i % 2 == 0:
            # keep only the throughput form of the measurement
            stripped.append(
                RunRecord(
                    run_id=r.run_id,
                    shape=r.shape,
                    batch=r.batch,
                    tokens_per_second=r.tokens_per_second,
                )
            )
        else:
            stripped.append(
                RunRecord(
                    run_id=r.run_id,
                    shape=r.shape,
                    batch=r.batch,
                    seconds_per_step=r.seconds_per_step,
                )
            )
    refit = fit_time_coefficients(RunDataset(records=tuple(stripped)))
    full = fit_time_coefficients(dataset)
    assert refit.c1 == pytest.approx(full.c1, rel=1e-12)
    assert refit.c2 == pytest.approx(full.c2, rel=1e-12)
    assert refit.c3 == pytest.approx(full.c3, rel=1e-12)


def test_fit_requires_four_timed_runs():
    dataset = generate_runs(_balanced_spec(samples=3, seed=14))
    with pytest.raises(ValidationError, match="at least 4"):
        fit_time_coefficients(dataset)


def test_restricted_modes_zero_the_excluded_term():
    dataset = generate_runs(_balanced_spec(samples=100, seed=15))
    mem_only = fit_time_coefficients(dataset, mode="memcpy_only")
    assert mem_only.c2 == 0.0
    assert mem_only.mode == "memcpy_only"
    flops_only = fit_time_coefficients(dataset, mode="flops_only")
    assert flops_only.c1 == 0.0
    assert flops_only.mode == "flops_only"


def test_negative_fitted_coefficient_is_noted_not_clamped():
    rng = np.random.default_rng(16)
    shapes = [
        TransformerShape(d=int(d), n=int(n), s=512, v=8000, w=int(w), h=4)
        for d, n, w in zip(
            2 ** rng.integers(5, 11, size=40),
            rng.integers(1, 9, size=40),
            2 ** rng.integers(8, 14, size=40),
        )
    ]
    records = tuple(
        RunRecord(
            run_id=f"r{i}",
            shape=s,
            seconds_per_step=1e-11 * count_memcpys(s) - 1e-17 * count_flops(s) + 1e-3,
        )
        for i, s in enumerate(shapes)
    )
    fitted = fit_time_coefficients(RunDataset(records=records))
    assert fitted.c2 == pytest.approx(-1e-17, rel=1e-6)
    assert any("c2" in note for note in fitted.notes)

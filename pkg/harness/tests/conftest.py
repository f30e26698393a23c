import pytest

from trainharness import MeasurementPlan, PlannedShape, measure

# Two distinct desk-scale shapes: steps run in a few milliseconds on
# CPU, so sub-second budgets still give dozens of post-warmup steps.
TINY_A = dict(d=32, n=1, s=32, v=64, w=64, h=2)
TINY_B = dict(d=48, n=2, s=32, v=96, w=96, h=3)


@pytest.fixture(scope="session")
def measured(tmp_path_factory):
    """One real 2-shape measurement, shared by every test that reads it."""
    plan = MeasurementPlan(
        shapes=(PlannedShape(**TINY_A), PlannedShape(**TINY_B)),
        batch=2,
        seconds_per_run=0.6,
        warmup_steps=2,
        seed=11,
    )
    out = tmp_path_factory.mktemp("measure") / "runs.csv"
    return plan, measure(plan, out=out)

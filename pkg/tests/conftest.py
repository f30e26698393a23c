"""Shared constants and fixtures for the test suite."""

import pytest

from traintime import ScalingLaw, TimeCoefficients, TrainBudget

# Step-time coefficients measured at a realistic accelerator operating
# point: FLOPS dominate, memory traffic contributes almost nothing to
# the total.  Good for prediction tests, useless for testing whether a
# fit can recover c1 from noisy data (it cannot, the signal is buried).
REFERENCE_TIME = dict(c1=3.74e-19, c2=2.4e-15, c3=1.46e-7)

# A synthetic operating point where all three terms carry comparable
# weight across the sweep, so every coefficient is identifiable even
# under multiplicative noise.
BALANCED_TIME = dict(c1=3.74e-12, c2=2.4e-15, c3=1.46e-4)

# Loss-law coefficients from a real fit at externally published
# exponents (Hoffmann et al. 2022 report alpha=0.34, beta=0.28).
REFERENCE_LAW = dict(A=195.76, B=182.52, E=2.34, alpha=0.34, beta=0.28)

THREE_HOURS = 10800.0


@pytest.fixture
def reference_time():
    return TimeCoefficients(**REFERENCE_TIME)


@pytest.fixture
def balanced_time():
    return TimeCoefficients(**BALANCED_TIME)


@pytest.fixture
def reference_law():
    return ScalingLaw(**REFERENCE_LAW)


@pytest.fixture
def steps_budget():
    return TrainBudget(T=THREE_HOURS, batch=1, token_mode="steps")

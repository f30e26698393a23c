"""Exception types for the measurement harness."""


class HarnessError(Exception):
    """Base class for everything this package raises on purpose."""


class PlanError(HarnessError):
    """A measurement plan is malformed or self-contradictory."""


class MeasurementError(HarnessError):
    """A run could not produce a usable measurement."""

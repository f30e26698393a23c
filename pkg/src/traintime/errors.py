"""Exception and warning types shared across the package.

The hierarchy maps onto the CLI exit codes: validation problems exit 1,
numeric/domain problems exit 2, and I/O or file-format problems exit 3.
"""


class TrainTimeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TrainTimeError, ValueError):
    """Malformed or out-of-contract input (bad shapes, bad arguments)."""


class SchemaError(ValidationError):
    """A tabular input file does not have the expected columns."""


class RowError(ValidationError):
    """A single row of a tabular input file could not be parsed."""


class GenerationError(ValidationError):
    """A synthetic sweep specification admits no valid samples."""


class NumericError(TrainTimeError, ArithmeticError):
    """Base class for problems detected during numeric evaluation."""


class SingularSystemError(NumericError):
    """A least-squares system is rank deficient."""


class NonphysicalTimeError(NumericError):
    """A step-time model produced a non-positive duration."""


class DomainError(NumericError):
    """An input lies outside the mathematical domain of an operation."""


class UndefinedVarianceError(DomainError):
    """r-squared requested against a constant target vector."""


class DegenerateConstraintError(DomainError):
    """A constraint gradient vanished, so projection is undefined."""


class BundleFormatError(TrainTimeError):
    """A coefficient bundle file is malformed or incomplete."""


class SweepRangeWarning(UserWarning):
    """A hyperparameter lies outside the range the models were fit on."""

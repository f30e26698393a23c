"""Predict transformer training loss from hyperparameters and a clock.

The pipeline: count what a shape costs (accounting), model how long a
step takes (throughput), model what loss a size and data volume reach
(scaling), then combine the two models so a wall-clock budget plus six
integers yields a predicted loss, its gradients, and architecture
recommendations (optimizer).
"""

from .accounting import (
    CostBreakdown,
    CostGradient,
    TransformerShape,
    accounting_gradients,
    count_all,
    count_flops,
    count_memcpys,
    count_params,
    itemized_breakdown,
)
from .dataio import (
    CoefficientBundle,
    RunDataset,
    RunRecord,
    load_coefficients,
    load_runs,
    save_coefficients,
    save_runs,
    split_dataset,
)
from .errors import (
    BundleFormatError,
    DegenerateConstraintError,
    DomainError,
    GenerationError,
    NonphysicalTimeError,
    NumericError,
    RowError,
    SchemaError,
    SingularSystemError,
    SweepRangeWarning,
    TrainTimeError,
    UndefinedVarianceError,
    ValidationError,
)
from .optimizer import (
    FieldSample,
    HyperGradient,
    HyperVector,
    RoundingReport,
    TrajectoryPoint,
    constrained_descent,
    gradient_field,
    loss_gradient,
    loss_value,
    project_onto_constant_params,
    round_to_lattice,
)
from .regress import DesignMatrix, FitReport, calibration_line, least_squares_fit, r_squared
from .scaling import (
    ScalingLaw,
    TrainBudget,
    chinchilla_loss,
    estimate_data,
    fit_law_coefficients,
    predict_loss_from_shape,
)
from .synth import SweepSpec, generate_runs
from .throughput import (
    TimeCoefficients,
    fit_time_coefficients,
    predict_step_time,
    throughput,
)

__version__ = "0.1.0"


def __getattr__(name):
    # The estimator facade drags in scikit-learn, which triples import
    # time; the CLI never touches it, so resolve these two lazily.
    if name in ("StepTimeRegressor", "ScalingLawRegressor"):
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "BundleFormatError",
    "CoefficientBundle",
    "CostBreakdown",
    "CostGradient",
    "DegenerateConstraintError",
    "DesignMatrix",
    "DomainError",
    "FieldSample",
    "FitReport",
    "GenerationError",
    "HyperGradient",
    "HyperVector",
    "NonphysicalTimeError",
    "NumericError",
    "RoundingReport",
    "RowError",
    "RunDataset",
    "RunRecord",
    "ScalingLaw",
    "ScalingLawRegressor",
    "SchemaError",
    "SingularSystemError",
    "StepTimeRegressor",
    "SweepRangeWarning",
    "SweepSpec",
    "TimeCoefficients",
    "TrainBudget",
    "TrainTimeError",
    "TrajectoryPoint",
    "TransformerShape",
    "UndefinedVarianceError",
    "ValidationError",
    "accounting_gradients",
    "calibration_line",
    "chinchilla_loss",
    "constrained_descent",
    "count_all",
    "count_flops",
    "count_memcpys",
    "count_params",
    "estimate_data",
    "fit_law_coefficients",
    "fit_time_coefficients",
    "generate_runs",
    "gradient_field",
    "itemized_breakdown",
    "least_squares_fit",
    "load_coefficients",
    "load_runs",
    "loss_gradient",
    "loss_value",
    "predict_loss_from_shape",
    "predict_step_time",
    "project_onto_constant_params",
    "r_squared",
    "round_to_lattice",
    "save_coefficients",
    "save_runs",
    "split_dataset",
    "throughput",
]

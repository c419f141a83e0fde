"""Jacobi needlet frames on [-1, 1] and the weighted function spaces they characterize."""

from .errors import (
    AccuracyError,
    AdmissibilityError,
    CapacityError,
    DegenerateError,
    NeedletError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
)
from .jacobi import (
    ExpansionCoefficients,
    RecurrenceTable,
    WeightParams,
    build_recurrence,
    eval_batch,
    eval_normalized,
    eval_unnormalized,
    expand,
    nikolski_probe,
)
from .quadrature import (
    LevelGeometry,
    QuadratureRule,
    arc_distance,
    christoffel_lower_probe,
    companion_weight,
    gauss_jacobi,
    level_geometry,
)

__version__ = "0.1.0"

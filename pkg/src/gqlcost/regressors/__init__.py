"""Operator catalog: scaler, transforms and regressors."""
from .operators import (
    OPERATORS,
    PREPROCESSORS,
    REGRESSORS,
    Operator,
    OperatorSpec,
    dump_operator,
    fit,
    load_operator,
    polynomial_width,
    predict,
)

__all__ = [
    "OPERATORS",
    "PREPROCESSORS",
    "REGRESSORS",
    "Operator",
    "OperatorSpec",
    "dump_operator",
    "fit",
    "load_operator",
    "polynomial_width",
    "predict",
]

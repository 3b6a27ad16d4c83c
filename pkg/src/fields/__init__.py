"""
Scalar fields package.
"""

from .base import ScalarField, as_point, as_points, fd_gradient_many, fd_hessian_many
from .composite import (
    AffinePullback,
    ClosedForm,
    ExpConvexified,
    MaxField,
    PiecewisePower,
    ProductField,
    SumField,
    power_series_coefficients,
)
from .config import create_field_from_json, field_to_json
from .polynomial import Polynomial
from .types import SMOOTH, FieldKind

__all__ = [
    # Base
    "ScalarField",
    "as_point",
    "as_points",
    "fd_gradient_many",
    "fd_hessian_many",
    # Kinds
    "Polynomial",
    "ClosedForm",
    "SumField",
    "ProductField",
    "MaxField",
    "AffinePullback",
    "ExpConvexified",
    "PiecewisePower",
    "power_series_coefficients",
    # Configs
    "create_field_from_json",
    "field_to_json",
    # Types
    "FieldKind",
    "SMOOTH",
]

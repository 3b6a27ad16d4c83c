"""
Exception hierarchy for convexlab

Two families map onto the command line exit-code contract:
- UsageError: bad inputs, unreadable specs, numerical preconditions the caller broke (exit 1)
- GeometricFailure: a mathematically meaningful negative answer (exit 2)

Every error carries a ``details`` dict that reports embed verbatim.
"""

from typing import Any, Dict, Optional

from .constants import EXIT_GEOMETRY, EXIT_USAGE


class ConvexLabError(Exception):
    """Root of all toolkit errors"""

    exit_code = EXIT_USAGE
    kind = "ConvexLabError"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "message": self.message, "details": self.details}


# Usage errors (exit 1)

class UsageError(ConvexLabError, ValueError):
    exit_code = EXIT_USAGE
    kind = "UsageError"


class DimensionMismatchError(UsageError):
    kind = "DimensionMismatch"


class NonDifferentiableError(UsageError):
    kind = "NonDifferentiable"


class DegenerateGradientError(UsageError):
    kind = "DegenerateGradient"


class RayMissError(UsageError):
    kind = "RayMiss"


class NoInteriorPointError(UsageError):
    kind = "NoInteriorPoint"


class NotTangentError(UsageError):
    kind = "NotTangent"


class NotOnBoundaryError(UsageError):
    kind = "NotOnBoundary"


class SingularTransformError(UsageError):
    kind = "SingularTransform"


class QuadratureError(UsageError):
    kind = "Quadrature"


class InterpolationError(UsageError):
    kind = "Interpolation"


class UnknownDomainError(UsageError):
    kind = "UnknownDomain"


class InvalidParameterError(UsageError):
    kind = "InvalidParameter"


# Geometric failures (exit 2)

class GeometricFailure(ConvexLabError, RuntimeError):
    exit_code = EXIT_GEOMETRY
    kind = "GeometricFailure"


class NotConvexDomainError(GeometricFailure):
    kind = "NotConvex"


class NotStronglyConvexError(GeometricFailure):
    kind = "NotStronglyConvex"


class NoSupportError(GeometricFailure):
    kind = "NoSupport"


class FlatPointError(GeometricFailure):
    kind = "FlatPoint"


class InfeasibleBumpError(GeometricFailure):
    kind = "Infeasible"


class CriticalLevelError(GeometricFailure):
    kind = "CriticalLevel"


class IndeterminateOrderError(GeometricFailure):
    kind = "IndeterminateOrder"


class InconclusiveWitnessError(GeometricFailure):
    kind = "InconclusiveWitness"


class VerificationError(GeometricFailure):
    kind = "VerificationFailed"

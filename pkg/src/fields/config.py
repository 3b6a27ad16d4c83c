"""
Utility functions for creating fields from JSON objects.
"""

from typing import Any, Dict, Mapping

from ..utils.errors import InvalidParameterError
from .base import ScalarField
from .composite import SumField
from .polynomial import Polynomial


def create_field_from_json(obj: Mapping[str, Any]) -> ScalarField:
    """
    Create a field from its JSON object.

    Polynomials use {"dim": N, "monomials": [{"exp": [...], "coef": c}, ...]};
    an explicit "kind": "polynomial" is accepted. Sums nest their terms
    under "fields". Other composite descriptors are report-only and cannot
    be loaded back.
    """
    kind = obj.get("kind", "polynomial")
    if kind == "polynomial":
        return Polynomial.from_json(obj)
    if kind == "sum":
        return _sum_from_json(obj)
    if kind == "lattice_mollified":
        # the lattice field lives with the exhaustion code, which imports this module
        from ..core.exhaust import GridMollifiedField
        return GridMollifiedField.from_json(obj)
    raise InvalidParameterError(f"Field kind '{kind}' cannot be loaded from JSON", {"kind": kind})


def _sum_from_json(obj: Mapping[str, Any]) -> SumField:
    try:
        fields = [create_field_from_json(term) for term in obj["fields"]]
        weights = [float(w) for w in obj["weights"]]
        constant = float(obj.get("constant", 0.0))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidParameterError(f"Malformed sum JSON: {e}")
    if len(weights) != len(fields):
        raise InvalidParameterError("Sum needs one weight per term",
                                    {"fields": len(fields), "weights": len(weights)})
    return SumField(fields, weights, constant, name=obj.get("name", "sum"))


def field_to_json(field: ScalarField) -> Dict[str, Any]:
    """Loadable JSON for polynomials, sums and lattice mollifications, a descriptor otherwise."""
    if isinstance(field, Polynomial):
        return field.to_json()
    if isinstance(field, SumField):
        return {"kind": "sum", "name": field.name, "dim": field.dim, "weights": field.weights,
                "constant": field.constant, "fields": [field_to_json(f) for f in field.fields]}
    to_json = getattr(field, "to_json", None)
    if callable(to_json):
        return to_json()
    return field.describe()

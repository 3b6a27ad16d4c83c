"""
Type definitions.
"""

from enum import Enum

# Declared differentiability class of an infinitely smooth field
SMOOTH = 99


class FieldKind(str, Enum):
    """
    polynomial:
        Finite monomial sum with exact calculus.
    composite:
        Named closed form built from other fields or from a domain
        (distance, gauge, mollification...). Derivatives are analytic when
        the composite supplies them, central differences otherwise.
    """

    polynomial = "polynomial"
    composite = "composite"

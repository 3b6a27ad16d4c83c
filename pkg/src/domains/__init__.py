"""
Domains package: smooth domains, non-smooth shapes and the gallery.
"""

from .domain import (
    BoundaryPoint,
    DomainSpec,
    closest_boundary_points,
    find_anchor,
    multiply_by_h,
    project_to_boundary,
    sample_boundary,
    tangent_basis,
)
from .gallery import GALLERY, get_domain, get_gallery_item, list_gallery, load_domain_file
from .shapes import Polytope, RoundedSquare, Shape

__all__ = [
    # Types
    "Shape",
    "DomainSpec",
    "BoundaryPoint",
    "Polytope",
    "RoundedSquare",
    # Operations
    "project_to_boundary",
    "tangent_basis",
    "sample_boundary",
    "multiply_by_h",
    "find_anchor",
    "closest_boundary_points",
    # Gallery
    "GALLERY",
    "get_domain",
    "get_gallery_item",
    "list_gallery",
    "load_domain_file",
]

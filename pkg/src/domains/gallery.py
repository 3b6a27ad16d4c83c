"""
Domain gallery for convexlab
Central registry of the named built-in domains and shapes
"""

import json
import os
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from ..fields.composite import ClosedForm
from ..fields.polynomial import Polynomial
from ..utils.constants import get_gallery_directory
from ..utils.errors import InvalidParameterError, UnknownDomainError
from .domain import DomainSpec
from .shapes import Polytope, RoundedSquare, Shape

GalleryItem = Union[DomainSpec, Shape]

PARAMETRIC = re.compile(r"^(?P<family>[a-z\-]+):(?P<m>\d+)$")


def _box(dim: int, half: float):
    return [-half] * dim, [half] * dim


def ball(dim: int) -> DomainSpec:
    rho = Polynomial.norm_squared(dim) - 1.0
    return DomainSpec(rho, _box(dim, 1.5), name=f"ball{dim}")


def em(m: int) -> DomainSpec:
    """x1^2 + x2^(2m) < 1; (±1, 0) are points of order 2m."""
    if m < 1:
        raise InvalidParameterError("em:<m> needs m >= 1", {"m": m})
    rho = Polynomial({(2, 0): 1.0, (0, 2 * m): 1.0, (0, 0): -1.0})
    return DomainSpec(rho, _box(2, 1.5), name=f"em:{m}")


def em_rotated(m: int) -> DomainSpec:
    """em:m turned by a quarter: x1^(2m) + x2^2 < 1, order 2m at (0, ±1)."""
    if m < 1:
        raise InvalidParameterError("em-rotated:<m> needs m >= 1", {"m": m})
    rho = Polynomial({(2 * m, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})
    return DomainSpec(rho, _box(2, 1.5), name=f"em-rotated:{m}")


def ellipse() -> DomainSpec:
    rho = Polynomial({(2, 0): 0.25, (0, 2): 1.0, (0, 0): -1.0})
    return DomainSpec(rho, ([-2.5, -1.5], [2.5, 1.5]), name="ellipse")


def distorted_ball() -> DomainSpec:
    rho = Polynomial.linear([1.0, 0.0], 2.0) * (Polynomial.norm_squared(2) - 1.0)
    return DomainSpec(rho, _box(2, 1.5), name="distorted-ball")


def annulus() -> DomainSpec:
    """Disc of radius 2 minus the closed unit disc centred at (1, 0)."""
    outer = Polynomial.norm_squared(2) - 4.0
    inner = Polynomial({(2, 0): 1.0, (1, 0): -2.0, (0, 2): 1.0})
    return DomainSpec(outer * inner, _box(2, 2.5), name="annulus")


def peanut() -> DomainSpec:
    """x2^2 - x1^2 + x1^4 - 0.05 < 0; pinched at (0, ±sqrt(0.05))."""
    rho = Polynomial({(0, 2): 1.0, (2, 0): -1.0, (4, 0): 1.0, (0, 0): -0.05})
    return DomainSpec(rho, ([-1.5, -1.0], [1.5, 1.0]), name="peanut")


def e3d() -> DomainSpec:
    rho = Polynomial({(2, 0, 0): 1.0, (0, 4, 0): 1.0, (0, 0, 4): 1.0, (0, 0, 0): -1.0})
    return DomainSpec(rho, _box(3, 1.5), name="e3d")


def flatcap() -> DomainSpec:
    """
    ((|x1| - 1/4)+)^4 + x2^2 < 1: convex, C^3, with the flat top segment
    x2 = 1, |x1| <= 1/4.
    """
    def excess(X):
        return np.maximum(np.abs(X[:, 0]) - 0.25, 0.0)

    def fn(X):
        return excess(X) ** 4 + X[:, 1] ** 2 - 1.0

    def grad(X):
        return np.column_stack([4.0 * excess(X) ** 3 * np.sign(X[:, 0]), 2.0 * X[:, 1]])

    def hess(X):
        H = np.zeros((len(X), 2, 2))
        H[:, 0, 0] = 12.0 * excess(X) ** 2
        H[:, 1, 1] = 2.0
        return H

    rho = ClosedForm("flatcap", fn, 2, 3, grad=grad, hess=hess, params={"flat_half_width": 0.25})
    return DomainSpec(rho, _box(2, 1.5), smoothness=3, name="flatcap")


def square() -> Polytope:
    return Polytope([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], name="square")


def rounded_square() -> RoundedSquare:
    return RoundedSquare(0.25)


@dataclass
class GalleryEntry:
    """Gallery metadata"""
    builder: Callable[..., GalleryItem]
    description: str = ""
    category: str = "smooth"  # 'smooth' or 'shape'
    convex: bool = True
    parametric: bool = False
    file: Optional[str] = None  # shipped JSON under configs/gallery


GALLERY: Dict[str, GalleryEntry] = {
    "ball2": GalleryEntry(lambda: ball(2), "unit disc", file="ball2.json"),
    "ball3": GalleryEntry(lambda: ball(3), "unit ball in R^3", file="ball3.json"),
    "em": GalleryEntry(em, "x1^2 + x2^(2m) < 1", parametric=True),
    "em-rotated": GalleryEntry(em_rotated, "x1^(2m) + x2^2 < 1", parametric=True),
    "ellipse": GalleryEntry(ellipse, "x1^2/4 + x2^2 < 1", file="ellipse.json"),
    "distorted-ball": GalleryEntry(distorted_ball, "(2 + x1)(|x|^2 - 1) < 0", file="distorted-ball.json"),
    "annulus": GalleryEntry(annulus, "B(0,2) minus closed B((1,0),1)", convex=False, file="annulus.json"),
    "peanut": GalleryEntry(peanut, "x2^2 - x1^2 + x1^4 < 0.05", convex=False, file="peanut.json"),
    "e3d": GalleryEntry(e3d, "x1^2 + x2^4 + x3^4 < 1", file="e3d.json"),
    "flatcap": GalleryEntry(flatcap, "disc-like cap with a flat top segment"),
    "square": GalleryEntry(square, "|x1|, |x2| < 1 as a polytope", category="shape"),
    "rounded-square": GalleryEntry(rounded_square, "square with radius-1/4 corner arcs", category="shape"),
}


def list_gallery() -> List[str]:
    """Gallery names; parametric families are shown with their parameter."""
    return [f"{name}:<m>" if entry.parametric else name for name, entry in GALLERY.items()]


def _load_shipped(filename: str) -> DomainSpec:
    return load_domain_file(os.path.join(get_gallery_directory(), filename))


def load_domain_file(path: str) -> DomainSpec:
    """Read a DomainSpec JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as e:
        raise UnknownDomainError(f"Cannot read domain file '{path}': {e}", {"path": path})
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Domain file '{path}' is not valid JSON: {e}", {"path": path})
    return DomainSpec.from_json(obj)


def get_gallery_item(name: str) -> GalleryItem:
    """
    Resolve a gallery name (``ball2``, ``em:3``, ``square`` ...) or a path to
    a DomainSpec JSON file.
    """
    match = PARAMETRIC.match(name)
    if match and match.group("family") in GALLERY and GALLERY[match.group("family")].parametric:
        return GALLERY[match.group("family")].builder(int(match.group("m")))
    entry = GALLERY.get(name)
    if entry is not None and not entry.parametric:
        if entry.file and os.path.isfile(os.path.join(get_gallery_directory(), entry.file)):
            return _load_shipped(entry.file)
        return entry.builder()
    if name.endswith(".json") or os.path.isfile(name):
        return load_domain_file(name)
    raise UnknownDomainError(f"Unknown domain '{name}'", {"name": name, "available": list_gallery()})


def get_domain(name: str) -> DomainSpec:
    """Like ``get_gallery_item`` but insists on a smooth DomainSpec."""
    item = get_gallery_item(name)
    if not isinstance(item, DomainSpec):
        raise InvalidParameterError(f"'{name}' is a non-smooth shape, not a DomainSpec",
                                    {"name": name, "type": type(item).__name__})
    return item

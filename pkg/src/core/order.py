"""
Finite-order contact of the tangent plane with the boundary.

The order at a boundary point is read off log-log slope fits of |rho|
along tangent lines: rho(P + s·t) ~ C s^k for small s. Finite orders of
convex points are even; flat directions are reported as infinite.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..common.config import pick
from ..common.partition import ordered_map
from ..common.seed import GOLDEN_RATIO_CONJUGATE, sphere_directions
from ..domains.domain import BoundaryPoint, DomainSpec, find_anchor, project_to_boundary, sample_boundary
from ..domains.gallery import ball
from ..fields.polynomial import Polynomial
from ..utils.constants import MACHINE_EPS
from ..utils.debug import Debug
from ..utils.errors import InvalidParameterError, NotConvexDomainError, RayMissError, VerificationError
from .convexity import ConvexityClass, PointLike, boundary_point, classify_point


class OrderStatus(str, Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    INDETERMINATE = "Indeterminate"
    ODD = "Odd"


@dataclass
class DirectionProbe:
    """Slope fit of log|rho(P + s·t)| against log s along one tangent direction."""

    direction: np.ndarray
    status: OrderStatus
    slope: Optional[float] = None
    order: Optional[int] = None
    table: List[List[float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "direction": self.direction.tolist(),
            "status": self.status.value,
            "slope": self.slope,
            "order": self.order,
            "probes": self.table,
        }


@dataclass
class OrderVerdict:
    location: np.ndarray
    status: OrderStatus
    order: Optional[int]
    cutoff: int
    direction_orders: List[DirectionProbe]

    @property
    def is_finite(self) -> bool:
        return self.status is OrderStatus.FINITE

    @property
    def label(self) -> str:
        if self.status is OrderStatus.FINITE:
            return str(self.order)
        if self.status is OrderStatus.INFINITE:
            return f"Infinite({self.cutoff})"
        return self.status.value

    def to_dict(self, with_probes: bool = True) -> Dict[str, Any]:
        out = {
            "point": self.location.tolist(),
            "status": self.status.value,
            "order": self.order,
            "label": self.label,
            "cutoff": self.cutoff,
        }
        if with_probes:
            out["directions"] = [p.to_dict() for p in self.direction_orders]
        return out


def _probe_floor(d: DomainSpec, X: np.ndarray, noise_factor: float, flat_floor: float) -> np.ndarray:
    if isinstance(d.rho, Polynomial):
        magnitudes = d.rho.term_magnitudes(X)
    else:
        magnitudes = np.full(len(X), d.scale)
    return np.maximum(flat_floor, noise_factor * MACHINE_EPS * magnitudes)


def _probe_direction(d: DomainSpec, P: np.ndarray, t: np.ndarray, exponents: np.ndarray, fit_points: int,
                     residual_tol: float, flat_floor: float, noise_factor: float, cutoff: int) -> DirectionProbe:
    s = 2.0 ** (-exponents.astype(float))
    X = P[None, :] + s[:, None] * t[None, :]
    values = np.abs(d.rho.values(X))
    table = [[float(a), float(b)] for a, b in zip(s, values)]
    if np.all(values < flat_floor):
        return DirectionProbe(t, OrderStatus.INFINITE, table=table)
    usable = np.nonzero(values > _probe_floor(d, X, noise_factor, flat_floor))[0]
    if len(usable) < 2:
        return DirectionProbe(t, OrderStatus.INDETERMINATE, table=table)
    # smallest steps sit deepest in the asymptotic regime
    chosen = usable[np.argsort(s[usable])[:fit_points]]
    slope = float(np.polyfit(np.log(s[chosen]), np.log(values[chosen]), 1)[0])
    nearest = int(round(slope))
    if abs(slope - nearest) > residual_tol:
        return DirectionProbe(t, OrderStatus.INDETERMINATE, slope=slope, table=table)
    if nearest > cutoff:
        return DirectionProbe(t, OrderStatus.INFINITE, slope=slope, table=table)
    if nearest % 2:
        return DirectionProbe(t, OrderStatus.ODD, slope=slope, order=nearest, table=table)
    return DirectionProbe(t, OrderStatus.FINITE, slope=slope, order=nearest, table=table)


def tangent_directions(bp: BoundaryPoint, extra: int, seed: int = 0) -> np.ndarray:
    """Basis tangents with both signs plus ``extra`` quasi-random tangent unit vectors."""
    B = bp.tangent_basis
    directions = [B, -B]
    if extra > 0 and len(B) > 0:
        coefficients = sphere_directions(extra, len(B), seed)
        combos = coefficients @ B
        directions.append(combos / np.linalg.norm(combos, axis=1, keepdims=True))
    return np.vstack(directions)


def contact_order(d: DomainSpec, P: PointLike, cutoff: Optional[int] = None, seed: int = 0,
                  check_convex: bool = True) -> OrderVerdict:
    """
    Order of contact of the tangent plane at P, capped at ``cutoff``.

    Raises:
        InvalidParameterError: cutoff is odd or smaller than 2
        NotConvexDomainError: P is not (weakly) convex and ``check_convex`` is set
    """
    cutoff = int(pick(cutoff, "order", "cutoff"))
    if cutoff < 2 or cutoff % 2:
        raise InvalidParameterError("cutoff must be an even integer >= 2", {"cutoff": cutoff})
    cutoff = min(cutoff, 2 * d.smoothness)
    cutoff -= cutoff % 2
    bp = boundary_point(d, P)
    if check_convex:
        verdict = classify_point(d, bp)
        if verdict.convexity_class is ConvexityClass.NOT_CONVEX:
            raise NotConvexDomainError("Contact order is defined for convex boundary points",
                                       {"point": bp.location.tolist(), "witness": verdict.witness.tolist()})
    exponents = np.arange(int(pick(None, "order", "probe_min_exponent")),
                          int(pick(None, "order", "probe_max_exponent")) + 1)
    settings = dict(
        fit_points=int(pick(None, "order", "fit_points")),
        residual_tol=float(pick(None, "order", "residual_tol")),
        flat_floor=float(pick(None, "order", "flat_floor")),
        noise_factor=float(pick(None, "order", "noise_factor")),
        cutoff=cutoff,
    )
    directions = tangent_directions(bp, int(pick(None, "order", "random_directions")), seed)
    probes = [_probe_direction(d, bp.location, t, exponents, **settings) for t in directions]

    statuses = {p.status for p in probes}
    if OrderStatus.INFINITE in statuses:
        return OrderVerdict(bp.location, OrderStatus.INFINITE, None, cutoff, probes)
    if OrderStatus.INDETERMINATE in statuses:
        return OrderVerdict(bp.location, OrderStatus.INDETERMINATE, None, cutoff, probes)
    order = max(p.order for p in probes)
    status = OrderStatus.ODD if OrderStatus.ODD in statuses else OrderStatus.FINITE
    return OrderVerdict(bp.location, status, order, cutoff, probes)


def evenness_check(verdict: OrderVerdict) -> bool:
    """
    Finite orders of convex points are even.

    Raises:
        InvalidParameterError: the verdict carries no fitted order at all
    """
    if verdict.status is OrderStatus.INFINITE:
        raise InvalidParameterError("Evenness is only defined for finite orders", {"label": verdict.label})
    if verdict.status is not OrderStatus.FINITE:
        return False
    return verdict.order % 2 == 0


@dataclass
class StabilityResult:
    base_order: int
    max_order: int
    orders: List[OrderVerdict]

    @property
    def passed(self) -> bool:
        return all(v.is_finite and v.order <= self.base_order for v in self.orders)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base_order": self.base_order,
            "max_order": self.max_order,
            "pass": self.passed,
            "neighbours": [v.to_dict(with_probes=False) for v in self.orders],
        }


def boundary_neighbours(d: DomainSpec, P: PointLike, radius: float, count: int, seed: int = 0) -> List[BoundaryPoint]:
    """
    Boundary points near P: P + r_i·t_i pushed back to the boundary along
    the ray from the interior anchor, r_i = radius·(i+1)/count.
    """
    bp = boundary_point(d, P)
    anchor = find_anchor(d)
    directions = tangent_directions(bp, count, seed)[2 * len(bp.tangent_basis):]
    neighbours = []
    for i in range(count):
        target = bp.location + radius * (i + 1) / count * directions[i]
        try:
            Q = project_to_boundary(d, anchor, target - anchor)
        except RayMissError:
            continue
        if np.linalg.norm(Q.location - bp.location) <= radius * 1.5:
            neighbours.append(Q)
    return neighbours


def order_stability_scan(d: DomainSpec, P: PointLike, radius: float = 0.1, count: Optional[int] = None,
                         seed: int = 0, debug: Optional[Debug] = None) -> StabilityResult:
    """
    Orders at nearby boundary points never exceed the order at P.

    Raises:
        InvalidParameterError: P itself has no finite order
    """
    count = int(pick(count, "order", "stability_count"))
    base = contact_order(d, P, seed=seed)
    if not base.is_finite:
        raise InvalidParameterError("Stability scan needs a finite order at P", {"label": base.label})
    neighbours = boundary_neighbours(d, P, radius, count, seed)
    orders = ordered_map(lambda Q: contact_order(d, Q, seed=seed, check_convex=False), neighbours)
    finite = [v.order for v in orders if v.order is not None]
    if debug:
        debug.log(f"{len(orders)} neighbours within {radius:g}, orders {sorted(set(finite))}", category="order")
    return StabilityResult(base.order, max(finite) if finite else base.order, orders)


@dataclass
class FarthestPatch:
    point: BoundaryPoint
    reference: np.ndarray
    neighbours: List[BoundaryPoint]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point.location.tolist(),
            "reference": self.reference.tolist(),
            "neighbours": [bp.location.tolist() for bp in self.neighbours],
        }


def farthest_point_patch(d: DomainSpec, samples: Optional[int] = None,
                         neighbours: Optional[int] = None) -> FarthestPatch:
    """
    The boundary sample farthest from a reference point placed 10 diameters
    away, together with its nearest samples; all must be strongly convex.

    The reference sits off every coordinate axis so axis-aligned flat
    points are never selected.

    Raises:
        VerificationError: the patch contains a point that is not strongly convex
    """
    samples = int(pick(samples, "convexity", "boundary_samples"))
    neighbours = int(pick(neighbours, "order", "farthest_neighbours"))
    lo, hi = d.bbox
    weights = GOLDEN_RATIO_CONJUGATE ** np.arange(d.dim)
    v = weights / np.linalg.norm(weights)
    reference = 0.5 * (lo + hi) - (10.0 * d.diameter + 0.5 * d.diameter) * v
    points = sample_boundary(d, samples, seed=0)
    locations = np.array([bp.location for bp in points])
    best = int(np.argmax(np.linalg.norm(locations - reference, axis=1)))
    order = np.argsort(np.linalg.norm(locations - locations[best], axis=1))
    patch = [points[i] for i in order[1:neighbours + 1]]
    for bp in [points[best]] + patch:
        verdict = classify_point(d, bp)
        if verdict.convexity_class is not ConvexityClass.STRONGLY_CONVEX:
            raise VerificationError("Farthest-point patch is not strongly convex",
                                    {"point": bp.location.tolist(), "class": verdict.convexity_class.value})
    return FarthestPatch(points[best], reference, patch)


def squaring_map_example(count: int = 16, window: float = 0.5) -> Dict[str, Any]:
    """
    Push boundary points of {x1^4 + x2^4 < 1} near (1, 0) through
    (x1, x2) -> (x1^2, x2^2): the order-4 point (1, 0) lands on the unit
    circle, where every image point has order 2.
    """
    if not 0 < window < 1:
        raise InvalidParameterError("window must lie in (0, 1)", {"window": window})
    source = DomainSpec(Polynomial({(4, 0): 1.0, (0, 4): 1.0, (0, 0): -1.0}), ([-1.5, -1.5], [1.5, 1.5]),
                        name="quartic-ball")
    target = ball(2)
    x2 = np.linspace(0.0, window, count)
    x1 = (1.0 - x2 ** 4) ** 0.25
    pre_images = np.column_stack([x1, x2])
    images = pre_images ** 2
    source_order = contact_order(source, [1.0, 0.0])
    image_orders = [contact_order(target, y / np.linalg.norm(y)) for y in images]
    residuals = np.abs(target.rho.values(images))
    return {
        "source_order": source_order.order,
        "image_orders": [v.order for v in image_orders],
        "image_classes": [classify_point(target, y / np.linalg.norm(y)).convexity_class.value for y in images],
        "max_image_residual": float(residuals.max()),
        "pre_images": pre_images.tolist(),
        "images": images.tolist(),
    }


def order_table(d: DomainSpec, points: Sequence[PointLike]) -> List[OrderVerdict]:
    return ordered_map(lambda P: contact_order(d, P), points)

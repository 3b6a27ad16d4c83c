"""
Hulls with respect to function families, extreme points, support
functions and the Minkowski gauge.

Compact sets are finite point samples and hulls are restricted to a
lattice over the bounding box. Every routine that only needs membership
works on any Shape (smooth domains, polytopes, the rounded square).
"""

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from ..common.config import pick
from ..common.partition import partition_by_size
from ..common.seed import box_points, sphere_directions
from ..domains.domain import DomainSpec, project_to_boundary, tangent_basis
from ..domains.shapes import Polytope, Shape
from ..fields.base import ScalarField, as_point
from ..fields.composite import ClosedForm, MaxField
from ..fields.polynomial import Polynomial
from ..utils.debug import Debug
from ..utils.errors import (
    InvalidParameterError,
    NoInteriorPointError,
    NoSupportError,
    NotOnBoundaryError,
)
from .convexity import require_convex


class FamilyKind(str, Enum):
    REAL_LINEAR = "RealLinear"
    CONTINUOUS = "Continuous"
    CUSTOM = "Custom"


@dataclass
class FunctionFamily:
    """
    Family F used to define hulls.

    RealLinear: x -> a·x for quasi-uniform unit a (constants cancel)
    Continuous: x -> 1/(1 + |x - t|) for every t; separates each point from any compact
    Custom: an explicit list of scalar fields
    """

    kind: FamilyKind
    directions: int = 256
    fields: List[ScalarField] = field(default_factory=list)

    @classmethod
    def real_linear(cls, directions: Optional[int] = None) -> "FunctionFamily":
        directions = int(pick(directions, "hulls", "directions"))
        if directions < 256:
            raise InvalidParameterError("RealLinear needs at least 256 directions", {"directions": directions})
        return cls(FamilyKind.REAL_LINEAR, directions)

    @classmethod
    def continuous(cls) -> "FunctionFamily":
        return cls(FamilyKind.CONTINUOUS)

    @classmethod
    def custom(cls, fields: Sequence[ScalarField]) -> "FunctionFamily":
        return cls(FamilyKind.CUSTOM, fields=list(fields))


@dataclass
class CompactSet:
    points: np.ndarray
    label: str = "K"

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.size == 0:
            raise InvalidParameterError("Compact sets must be nonempty", {"label": self.label})

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(self.dim)] + ["label"])
        for row in self.points:
            writer.writerow([repr(float(v)) for v in row] + [self.label])
        return buffer.getvalue()


def lattice(shape: Shape, grid: int) -> np.ndarray:
    """grid^N equispaced lattice over the bounding box, corners included."""
    lo, hi = shape.bbox
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(shape.dim)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, shape.dim)


def f_hull(d: Shape, K: CompactSet, F: FunctionFamily, grid: Optional[int] = None) -> CompactSet:
    """
    Lattice points x of Omega (plus K itself) with f(x) <= max_K f for all f in F.

    Raises:
        InvalidParameterError: a point of K lies outside Omega
        NoInteriorPointError: the lattice misses Omega entirely
    """
    grid = int(pick(grid, "hulls", "grid"))
    if K.dim != d.dim:
        raise InvalidParameterError("K and the domain have different dimensions", {"K": K.dim, "domain": d.dim})
    if not np.all(d.contains(K.points)):
        raise InvalidParameterError("K must lie inside the domain", {"label": K.label})
    nodes = lattice(d, grid)
    nodes = nodes[d.contains(nodes)]
    if len(nodes) == 0:
        raise NoInteriorPointError("Lattice does not meet the domain", {"grid": grid})
    candidates = np.vstack([nodes, K.points])

    if F.kind is FamilyKind.CONTINUOUS:
        # the member centred at x itself separates x from K unless x is in K
        distances, _ = cKDTree(K.points).query(candidates)
        keep = distances == 0.0
    elif F.kind is FamilyKind.REAL_LINEAR:
        A = sphere_directions(F.directions, d.dim, seed=0)
        ceiling = (K.points @ A.T).max(axis=0)
        tol = 1e-12 * max(1.0, float(np.abs(K.points).max()))
        keep = np.concatenate([
            np.all(block @ A.T <= ceiling + tol, axis=1) for block in partition_by_size(candidates, 8192)
        ])
    else:
        keep = np.ones(len(candidates), dtype=bool)
        for f in F.fields:
            ceiling = float(f.values(K.points).max())
            keep &= f.values(candidates) <= ceiling + 1e-12 * max(1.0, abs(ceiling))
    hull = np.unique(candidates[keep], axis=0)
    return CompactSet(hull, label=f"hull({K.label})")


def _distances_inside(d: Shape, X: np.ndarray) -> np.ndarray:
    inside = d.contains(X)
    distances = np.zeros(len(X))
    if np.any(inside):
        distances[inside] = d.boundary_distance(X[inside])
    return distances


def segment_compactness_check(d: Shape, segments: Sequence[Tuple[Sequence[float], Sequence[float]]],
                              samples: Optional[int] = None) -> Dict[str, Any]:
    """
    Compare distances of segment endpoints and of whole segments to the boundary.

    ``escapes`` is set when the endpoints stay a distance b > 0 away while
    some segment comes closer than b/10.

    Raises:
        InvalidParameterError: an endpoint lies outside Omega
    """
    samples = int(pick(samples, "hulls", "segment_samples"))
    t = np.linspace(0.0, 1.0, samples)
    rows = []
    for a, b in segments:
        a = as_point(a, d.dim)
        b = as_point(b, d.dim)
        ends = np.vstack([a, b])
        if not np.all(d.contains(ends)):
            raise InvalidParameterError("Segment endpoint outside the domain", {"a": a.tolist(), "b": b.tolist()})
        points = a[None, :] + t[:, None] * (b - a)[None, :]
        rows.append({
            "a": a.tolist(),
            "b": b.tolist(),
            "endpoint_distance": float(_distances_inside(d, ends).min()),
            "segment_distance": float(_distances_inside(d, points).min()),
        })
    endpoint_min = min(r["endpoint_distance"] for r in rows)
    segment_min = min(r["segment_distance"] for r in rows)
    return {
        "segments": rows,
        "endpoint_min": endpoint_min,
        "segment_min": segment_min,
        "escapes": bool(endpoint_min > 0.0 and segment_min < endpoint_min / 10.0),
    }


@dataclass
class ExtremeResult:
    point: np.ndarray
    extreme: bool
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"point": self.point.tolist(), "verdict": "Extreme" if self.extreme else "NotExtreme"}
        if not self.extreme:
            out["a"] = self.a.tolist()
            out["b"] = self.b.tolist()
        return out


def _require_boundary(shape: Shape, P: np.ndarray, tol: float = 1e-9) -> None:
    if isinstance(shape, DomainSpec):
        tangent_basis(shape, P)
        return
    distance = float(shape.boundary_distance(P[None, :])[0])
    if distance > tol * max(1.0, shape.diameter):
        raise NotOnBoundaryError("Point is not on the boundary", {"point": P.tolist(), "distance": distance})


def is_extreme(shape: Shape, P: Sequence[float], probe: Optional[int] = None,
               radius_fraction: Optional[float] = None, levels: Optional[int] = None) -> ExtremeResult:
    """
    Search chords P ± r·u inside the closed shape.

    Radii run r_max·2^-i, i = 0..levels-1, with r_max = fraction·(largest bbox side).

    Raises:
        NotOnBoundaryError: P is not a boundary point
    """
    probe = int(pick(probe, "hulls", "extreme_directions"))
    fraction = float(pick(radius_fraction, "hulls", "extreme_radius_fraction"))
    levels = int(pick(levels, "hulls", "extreme_radius_levels"))
    P = as_point(P, shape.dim)
    _require_boundary(shape, P)
    lo, hi = shape.bbox
    r_max = fraction * float(np.max(hi - lo))
    U = sphere_directions(probe, shape.dim, seed=0)
    for i in range(levels):
        r = r_max * 2.0 ** (-i)
        ends_a = P[None, :] + r * U
        ends_b = P[None, :] - r * U
        ok = shape.contains_closed(ends_a) & shape.contains_closed(ends_b)
        if np.any(ok):
            j = int(np.argmax(ok))
            return ExtremeResult(P, False, ends_b[j], ends_a[j])
    return ExtremeResult(P, True)


def chord_witness(shape: Shape, P: Sequence[float], a: Sequence[float], b: Sequence[float],
                  tol: float = 1e-9) -> Dict[str, Any]:
    """Verify a given pair a != b of boundary points with P on the open chord ab."""
    P = as_point(P, shape.dim)
    a = as_point(a, shape.dim)
    b = as_point(b, shape.dim)
    ab = b - a
    length_sq = float(ab @ ab)
    lam = float((P - a) @ ab / length_sq) if length_sq > 0 else 0.0
    on_chord = length_sq > 0 and 0.0 < lam < 1.0 and float(np.linalg.norm(a + lam * ab - P)) <= tol
    on_boundary = bool(np.all(shape.boundary_distance(np.vstack([a, b])) <= tol)
                       and np.all(shape.contains_closed(np.vstack([a, b]), tol)))
    return {"lambda": lam, "on_chord": bool(on_chord), "on_boundary": on_boundary,
            "valid": bool(on_chord and on_boundary)}


@dataclass
class SupportResult:
    point: np.ndarray
    normal: np.ndarray
    offset: float
    zero_set: np.ndarray
    max_interior_value: float

    def __call__(self, X: Any) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.normal - self.offset

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point.tolist(),
            "normal": self.normal.tolist(),
            "offset": self.offset,
            "zero_set": self.zero_set.tolist(),
            "max_interior_value": self.max_interior_value,
        }


def interior_samples(shape: Shape, count: int, seed: int = 0) -> np.ndarray:
    """Up to ``count`` quasi-random interior points."""
    lo, hi = shape.bbox
    drawn = box_points(4 * count, lo, hi, seed)
    inside = drawn[shape.contains(drawn)]
    if len(inside) == 0:
        raise NoInteriorPointError("No interior sample found", {"shape": shape.name})
    return inside[:count]


def support_function(shape: Shape, P: Sequence[float], interior: Optional[int] = None,
                     boundary: Optional[int] = None, zero_tol: Optional[float] = None) -> SupportResult:
    """
    L(x) = nu·(x - P), checked negative on interior samples.

    Raises:
        NoSupportError: an interior sample has L >= 0
    """
    interior = int(pick(interior, "hulls", "support_interior_samples"))
    boundary = int(pick(boundary, "hulls", "support_boundary_samples"))
    zero_tol = float(pick(zero_tol, "hulls", "support_zero_tol"))
    P = as_point(P, shape.dim)
    _require_boundary(shape, P)
    nu = shape.normal_at(P)
    offset = float(nu @ P)
    X = interior_samples(shape, interior)
    values = X @ nu - offset
    worst = int(np.argmax(values))
    if values[worst] >= 0.0:
        raise NoSupportError("Tangent hyperplane does not support the domain",
                             {"point": P.tolist(), "interior_sample": X[worst].tolist(), "value": float(values[worst])})
    B = shape.boundary_points(boundary, seed=0)
    zero_set = B[np.abs(B @ nu - offset) <= zero_tol]
    return SupportResult(P, nu, offset, zero_set, float(values[worst]))


def support_defining_function(shape: Shape, samples: Optional[int] = None) -> ScalarField:
    """
    max over boundary samples P of nu_P·(x - P): a convex, Lipschitz
    defining function of a convex shape (up to sampling).
    """
    samples = int(pick(samples, "convexity", "boundary_samples"))
    B = shape.boundary_points(samples, seed=0)
    pieces = []
    for P in B:
        nu = shape.normal_at(P)
        pieces.append(Polynomial.linear(nu, -float(nu @ P)))
    return MaxField(pieces, name=f"support_sup({shape.name})")


def _validate_gauge(shape: Shape) -> None:
    if not bool(shape.contains(np.zeros((1, shape.dim)))[0]):
        raise InvalidParameterError("The origin is not interior", {"shape": shape.name})
    require_convex(shape, pairs=200)


def minkowski_gauge(shape: Shape, x: Sequence[float], steps: Optional[int] = None) -> float:
    """
    p(x) = inf {r > 0 : x in r·Omega}.

    Polytopes use max_i n_i·x / c_i, smooth domains the ray distance to the
    boundary, other shapes bisection on r.

    Raises:
        InvalidParameterError: the origin is not interior
        NotConvexDomainError: the oracle finds the shape non-convex
    """
    _validate_gauge(shape)
    x = as_point(x, shape.dim)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        return 0.0
    if isinstance(shape, Polytope):
        return float(shape.gauge(x[None, :])[0])
    if isinstance(shape, DomainSpec):
        hit = project_to_boundary(shape, np.zeros(shape.dim), x)
        return norm / float(np.linalg.norm(hit.location))
    steps = int(pick(steps, "hulls", "gauge_bisection_steps"))
    lo_r, hi_r = 0.0, 1.0
    while not bool(shape.contains_closed((x / hi_r)[None, :])[0]):
        hi_r *= 2.0
    for _ in range(steps):
        mid = 0.5 * (lo_r + hi_r)
        if bool(shape.contains_closed((x / mid)[None, :])[0]):
            hi_r = mid
        else:
            lo_r = mid
    return hi_r


def gauge_field(shape: Shape) -> ScalarField:
    """The gauge as a C^0 scalar field, for convexity checks."""
    _validate_gauge(shape)
    return ClosedForm(f"gauge({shape.name})", lambda X: np.array([minkowski_gauge(shape, x) for x in X]),
                      shape.dim, 0)


def krein_milman_check(shape: Shape, samples: Optional[int] = None, test_points: int = 200,
                       grid: Optional[int] = None, debug: Optional[Debug] = None) -> Dict[str, Any]:
    """
    The convex hull of the extreme boundary samples covers interior test
    points, up to one lattice cell.
    """
    samples = int(pick(samples, "convexity", "boundary_samples"))
    grid = int(pick(grid, "hulls", "grid"))
    B = shape.boundary_points(samples, seed=0)
    verdicts = [is_extreme(shape, P) for P in B]
    extreme = np.array([v.point for v in verdicts if v.extreme])
    if len(extreme) <= shape.dim:
        return {"extreme_points": len(extreme), "covered": 0, "tests": test_points, "pass": False}
    hull = ConvexHull(extreme)
    lo, hi = shape.bbox
    cell = float(np.max(hi - lo)) / grid
    X = interior_samples(shape, test_points, seed=1)
    slack = (X @ hull.equations[:, :-1].T + hull.equations[:, -1]).max(axis=1)
    covered = int(np.sum(slack <= cell))
    if debug:
        debug.log(f"{len(extreme)} extreme samples cover {covered}/{len(X)} test points", category="hull")
    return {"extreme_points": int(len(extreme)), "covered": covered, "tests": int(len(X)),
            "pass": covered == len(X)}

"""
Exhaustion functions of convex domains and convex-function smoothing.

Distances to the boundary come from the closest-point solver of the
domains package. On top of them sit -log(distance), the max-form
exhaustion max(-log distance, |x|^2), mollification by a radial bump,
the distributional convexity test, subharmonicity checks and the
decomposition of a domain into nested strongly convex sublevel sets.
"""

import base64
import csv
import io
import math
import zlib
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from ..common.config import pick
from ..common.partition import chunked_apply
from ..common.seed import box_points, sphere_directions
from ..domains.domain import DomainSpec, closest_boundary_points, sample_boundary
from ..domains.shapes import Shape
from ..fields.base import ScalarField, as_point, as_points
from ..fields.composite import ClosedForm, SumField
from ..fields.polynomial import Polynomial
from ..fields.types import SMOOTH
from ..utils.debug import Debug, progress
from ..utils.errors import (
    CriticalLevelError,
    DimensionMismatchError,
    InvalidParameterError,
    NoInteriorPointError,
    NonDifferentiableError,
    QuadratureError,
    VerificationError,
)
from .convexity import (
    CheckResult,
    ConvexityClass,
    classify_point,
    geometric_convexity_oracle,
    interior_pairs,
    midpoint_convexity_check,
    require_convex,
)
from .hulls import interior_samples, lattice

# exp(-1/t) underflows to zero below this
_BUMP_CUTOFF = 2e-3


# Distances

def distance_many(shape: Shape, X: Any) -> np.ndarray:
    X = as_points(X, shape.dim)
    if len(X) == 0:
        return np.zeros(0)
    if isinstance(shape, DomainSpec):
        return closest_boundary_points(shape, X)[0]
    return np.asarray(shape.boundary_distance(X), dtype=float)


def distance_to_boundary(d: Shape, x: Sequence[float]) -> float:
    """
    Euclidean distance from an interior point to the boundary.

    Raises:
        InvalidParameterError: x is not in the domain
    """
    x = as_point(x, d.dim)
    if not bool(d.contains(x[None, :])[0]):
        raise InvalidParameterError("Distance is only defined for interior points", {"x": x.tolist()})
    return float(distance_many(d, x[None, :])[0])


# Exhaustions

class ExhaustionKind(str, Enum):
    NEG_LOG_DISTANCE = "NegLogDistance"
    MAX_FORM = "MaxForm"


class ExhaustionFunction(ScalarField):
    """
    -log(distance to the boundary), optionally maxed with |x|^2.

    +inf outside the domain. Only continuous.
    """

    def __init__(self, shape: Shape, kind: ExhaustionKind, checks: Optional[List[Dict[str, Any]]] = None):
        super().__init__(shape.dim, 0, f"{kind.value}({shape.name})")
        self.shape = shape
        self.exhaustion_kind = kind
        self.checks = list(checks or [])

    def from_distances(self, X: np.ndarray, distances: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            values = -np.log(distances)
        if self.exhaustion_kind is ExhaustionKind.MAX_FORM:
            values = np.maximum(values, np.einsum("ij,ij->i", X, X))
        return values

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        out = np.full(len(X), np.inf)
        inside = self.shape.contains(X)
        if np.any(inside):
            out[inside] = self.from_distances(X[inside], distance_many(self.shape, X[inside]))
        return out

    def values_capped(self, X: np.ndarray, cap: float) -> np.ndarray:
        """min(E, cap), skipping distance solves wherever |x|^2 alone exceeds the cap."""
        out = np.full(len(X), float(cap))
        live = self.shape.contains(X)
        if self.exhaustion_kind is ExhaustionKind.MAX_FORM:
            live &= np.einsum("ij,ij->i", X, X) < cap
        if np.any(live):
            out[live] = np.minimum(self.eval_many(X[live]), cap)
        return out

    def sublevel(self, c: float) -> "SublevelShape":
        return SublevelShape(self, c)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "exhaustion": self.exhaustion_kind.value, "domain": self.shape.name}


class SublevelShape(Shape):
    """{E < c} as a shape, so the segment oracle applies to it."""

    def __init__(self, E: ExhaustionFunction, c: float, bisection_steps: int = 60):
        self.E = E
        self.c = float(c)
        self.name = f"{E.name}<{self.c:g}"
        self.bisection_steps = bisection_steps
        self._centre: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.E.dim

    @property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.E.shape.bbox

    def contains(self, X: np.ndarray) -> np.ndarray:
        return self.E.values(X) < self.c

    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.E.values(X) <= self.c + tol

    @property
    def centre(self) -> np.ndarray:
        if self._centre is None:
            nodes = lattice(self, int(pick(None, "exhaust", "grid")))
            values = self.E.values(nodes)
            if not np.isfinite(values).any() or values.min() > self.c:
                raise NoInteriorPointError("Sublevel set is empty on the lattice", {"c": self.c})
            self._centre = nodes[int(np.argmin(values))]
        return self._centre

    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Bisection along rays from the lattice minimiser; sublevels are star-shaped about it."""
        centre = self.centre
        U = sphere_directions(count, self.dim, seed)
        lo_t = np.zeros(count)
        hi_t = np.full(count, self.E.shape.diameter)
        for _ in range(self.bisection_steps):
            mid = 0.5 * (lo_t + hi_t)
            inside = self.contains_closed(centre[None, :] + mid[:, None] * U)
            lo_t = np.where(inside, mid, lo_t)
            hi_t = np.where(inside, hi_t, mid)
        return centre[None, :] + lo_t[:, None] * U

    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        samples = self.boundary_points(512)
        diff = X[:, None, :] - samples[None, :, :]
        return np.sqrt(np.einsum("mkn,mkn->mk", diff, diff)).min(axis=1)

    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        raise NonDifferentiableError("Sublevel sets of a continuous exhaustion have no pointwise normal",
                                     {"shape": self.name})

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "level": self.c, "exhaustion": self.E.describe()}


def neg_log_distance_field(d: Shape, pairs: Optional[int] = None, verify: bool = True) -> ExhaustionFunction:
    """
    x -> -log(distance to the boundary) on a convex domain.

    Raises:
        NotConvexDomainError: the segment oracle refuses the domain
        VerificationError: midpoint convexity fails on sampled pairs
    """
    require_convex(d)
    E = ExhaustionFunction(d, ExhaustionKind.NEG_LOG_DISTANCE)
    if verify:
        pairs = int(pick(pairs, "convexity", "midpoint_pairs"))
        X, Y = interior_pairs(d, pairs, seed=0)
        check = midpoint_convexity_check(E, X, Y, tol=1e-9)
        E.checks.append({"midpoint": check.to_dict()})
        if not check.passed:
            raise VerificationError("-log distance failed midpoint convexity", check.to_dict())
    return E


def max_exhaustion(d: Shape, levels: Optional[Sequence[float]] = None, grid: Optional[int] = None,
                   verify: bool = True, debug: Optional[Debug] = None) -> ExhaustionFunction:
    """
    lambda(x) = max(-log distance(x), |x|^2).

    Each checked level c gets the lattice points with lambda <= c: their
    distance to the boundary must be at least e^-c / 2, and the sublevel
    set must pass the segment oracle.

    Raises:
        NotConvexDomainError: the domain is not convex
        VerificationError: a sublevel set is not compactly contained or not convex
    """
    require_convex(d)
    E = ExhaustionFunction(d, ExhaustionKind.MAX_FORM)
    if not verify:
        return E
    levels = [float(c) for c in pick(levels, "exhaust", "check_levels")]
    grid = int(pick(grid, "exhaust", "grid"))
    nodes = lattice(d, grid)
    nodes = nodes[d.contains(nodes)]
    distances = distance_many(d, nodes)
    values = E.from_distances(nodes, distances)
    for c in levels:
        mask = values <= c
        margin = math.exp(-c) / 2.0
        record: Dict[str, Any] = {"level": c, "points": int(mask.sum()), "margin": margin}
        if mask.any():
            record["min_distance"] = float(distances[mask].min())
            if record["min_distance"] < margin:
                raise VerificationError("Sublevel set is not compactly contained", record)
            try:
                oracle = geometric_convexity_oracle(E.sublevel(c))
            except NoInteriorPointError:
                record["oracle"] = "degenerate"
            else:
                record["oracle"] = oracle.to_dict()
                if not oracle.convex:
                    raise VerificationError("Sublevel set is not convex", record)
        if debug:
            debug.log(f"level {c:g}: {record['points']} lattice points", category="exhaust")
        E.checks.append(record)
    return E


def composition_check(d: Shape, pairs: Optional[int] = None) -> CheckResult:
    """exp(-log distance) = 1/distance is convex when -log distance is."""
    pairs = int(pick(pairs, "convexity", "midpoint_pairs"))
    require_convex(d)
    inverse = ClosedForm("inverse_distance", lambda X: 1.0 / distance_many(d, X), d.dim, 0)
    X, Y = interior_pairs(d, pairs, seed=0)
    return midpoint_convexity_check(inverse, X, Y, tol=1e-9)


def exhaustion_grid(E: ExhaustionFunction, grid: Optional[int] = None) -> str:
    """CSV of E over the bounding-box lattice; 'inf' outside the domain."""
    grid = int(pick(grid, "exhaust", "grid"))
    nodes = lattice(E.shape, grid)
    values = E.values(nodes)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(E.dim)] + ["value"])
    for row, value in zip(nodes, values):
        writer.writerow([repr(float(v)) for v in row] + [repr(float(value))])
    return buffer.getvalue()


# Mollifiers

def _sphere_area(dim: int) -> float:
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def _bump(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g(s) = exp(-1/(1-s)) and its first two derivatives, zero for s >= 1."""
    t = 1.0 - s
    live = t > _BUMP_CUTOFF
    g = np.zeros_like(s)
    g1 = np.zeros_like(s)
    g2 = np.zeros_like(s)
    tl = t[live]
    gl = np.exp(-1.0 / tl)
    g[live] = gl
    g1[live] = -gl / tl ** 2
    g2[live] = gl * (1.0 / tl ** 4 - 2.0 / tl ** 3)
    return g, g1, g2


@lru_cache(maxsize=32)
def _midpoint_nodes(dim: int, grid: int) -> Tuple[np.ndarray, float]:
    axis = -1.0 + (2.0 * np.arange(grid) + 1.0) / grid
    U = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    U = U[np.einsum("ij,ij->i", U, U) < 1.0]
    return U, (2.0 / grid) ** dim


@dataclass(frozen=True)
class MollifierProfile:
    """
    Radial bump c_N·exp(-1/(1 - |u|^2)) on the unit ball, unit integral.

    c_N comes from one-dimensional radial quadrature.
    """

    dim: int

    @property
    def normalization(self) -> float:
        return _profile_normalization(self.dim)

    def values(self, U: np.ndarray) -> np.ndarray:
        g, _, _ = _bump(np.einsum("ij,ij->i", U, U))
        return self.normalization * g

    def gradients(self, U: np.ndarray) -> np.ndarray:
        _, g1, _ = _bump(np.einsum("ij,ij->i", U, U))
        return self.normalization * 2.0 * g1[:, None] * U

    def hessians(self, U: np.ndarray) -> np.ndarray:
        _, g1, g2 = _bump(np.einsum("ij,ij->i", U, U))
        outer = U[:, :, None] * U[:, None, :]
        eye = np.eye(U.shape[1])[None, :, :]
        return self.normalization * (4.0 * g2[:, None, None] * outer + 2.0 * g1[:, None, None] * eye)

    def directional_second(self, U: np.ndarray, w: np.ndarray) -> np.ndarray:
        """w^T (Hessian of the profile) w at the rows of U."""
        _, g1, g2 = _bump(np.einsum("ij,ij->i", U, U))
        return self.normalization * (4.0 * g2 * (U @ w) ** 2 + 2.0 * g1 * float(w @ w))

    def second_moment(self) -> float:
        """Integral of u_1^2 times the profile."""
        radial, _ = integrate.quad(lambda r: r ** (self.dim + 1) * _bump(np.array([r * r]))[0][0], 0.0, 1.0,
                                   epsabs=1e-15, epsrel=1e-13, limit=200)
        return self.normalization * _sphere_area(self.dim) * radial / self.dim

    def nodes(self, grid: int, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Midpoint nodes inside the unit ball with weights normalized to sum 1.

        Returns (nodes, weights, raw quadrature mass).

        Raises:
            QuadratureError: the raw mass differs from 1 by more than tol
        """
        tol = float(pick(tol, "exhaust", "profile_tol"))
        if grid < 3 or grid % 2 == 0:
            raise InvalidParameterError("Mollifier grids need an odd count >= 3", {"grid": grid})
        U, cell = _midpoint_nodes(self.dim, grid)
        raw = self.values(U) * cell
        mass = float(raw.sum())
        if abs(mass - 1.0) > tol:
            raise QuadratureError("Mollifier grid too coarse", {"grid": grid, "mass": mass, "tol": tol})
        return U, raw / mass, mass


@lru_cache(maxsize=8)
def _profile_normalization(dim: int) -> float:
    radial, _ = integrate.quad(lambda r: r ** (dim - 1) * _bump(np.array([r * r]))[0][0], 0.0, 1.0,
                               epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / (_sphere_area(dim) * radial)


class MollifiedField(ScalarField):
    """
    F_eps(x) = Σ_i w_i F(x - eps·u_i) over the profile's midpoint nodes.
    """

    def __init__(self, F: ScalarField, eps: float, profile: MollifierProfile, grid: int):
        super().__init__(F.dim, SMOOTH, f"mollified({F.name},{eps:g})")
        self.F = F
        self.eps = float(eps)
        self.profile = profile
        self.grid = int(grid)
        self.nodes, self.weights, self.mass = profile.nodes(self.grid)

    def _block(self, X: np.ndarray) -> np.ndarray:
        shifted = X[:, None, :] - self.eps * self.nodes[None, :, :]
        values = self.F.eval_many(shifted.reshape(-1, self.dim)).reshape(len(X), len(self.nodes))
        return values @ self.weights

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return chunked_apply(self._block, X, size=max(1, (1 << 20) // len(self.nodes)))

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "eps": self.eps, "grid": self.grid, "base": self.F.describe()}


def mollify(F: ScalarField, eps: float, profile: Optional[MollifierProfile] = None,
            grid: Optional[int] = None, verify: bool = True, triples: Optional[int] = None,
            lo: Optional[Sequence[float]] = None, hi: Optional[Sequence[float]] = None,
            debug: Optional[Debug] = None) -> MollifiedField:
    """
    Convolution of F with the scaled profile by tensor midpoint quadrature.

    With ``verify`` the result is checked on the working box: midpoint
    convexity on ``triples`` quasi-random pairs and F_eps >= F at their
    first points, both within 1e-8 relative.

    Raises:
        InvalidParameterError: eps <= 0
        QuadratureError: the node weights do not integrate the profile to 1
        VerificationError: the smoothed function fails either check
    """
    if not eps > 0:
        raise InvalidParameterError("eps must be positive", {"eps": eps})
    grid = int(pick(grid, "exhaust", "mollifier_grid"))
    smoothed = MollifiedField(F, eps, profile or MollifierProfile(F.dim), grid)
    if verify:
        _verify_mollified(F, smoothed, triples, lo, hi, debug)
    return smoothed


def _verify_mollified(F: ScalarField, smoothed: MollifiedField, triples: Optional[int],
                      lo: Optional[Sequence[float]], hi: Optional[Sequence[float]], debug: Optional[Debug],
                      tol: float = 1e-8) -> None:
    triples = int(pick(triples, "exhaust", "midpoint_triples"))
    lo, hi = _working_box(F.dim, lo, hi)
    Z = box_points(2 * triples, lo, hi, seed=0)
    X, Y = Z[:triples], Z[triples:]
    convex = midpoint_convexity_check(smoothed, X, Y, tol=tol)
    if not convex.passed:
        raise VerificationError("Mollified function fails the midpoint convexity test",
                                {"eps": smoothed.eps, "check": convex.to_dict()})
    above = smoothed.values(X)
    below = F.values(X)
    gap = (above - below) / np.maximum(1.0, np.abs(below))
    worst = int(np.argmin(gap))
    if gap[worst] < -tol:
        raise VerificationError("Mollified function dips below the original",
                                {"eps": smoothed.eps, "x": X[worst].tolist(),
                                 "smoothed": float(above[worst]), "F": float(below[worst])})
    if debug:
        debug.log(f"Mollified {F.name} at eps={smoothed.eps:g}: {triples} midpoint triples pass",
                  category="exhaust")


def _working_box(dim: int, lo: Optional[Sequence[float]], hi: Optional[Sequence[float]]):
    w = float(pick(None, "exhaust", "working_half_width"))
    lo = np.full(dim, -w) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(dim, w) if hi is None else np.asarray(hi, dtype=float)
    return lo, hi


def _smoothing_term(F: ScalarField, j: int, grid: Optional[int]) -> ScalarField:
    scale = 2.0 ** (-j)
    return SumField([mollify(F, scale, grid=grid, verify=False), Polynomial.norm_squared(F.dim)],
                    weights=[1.0, scale], name=f"f_{j}({F.name})")


def strongly_convex_smoothing_sequence(F: ScalarField, j: int, lo: Optional[Sequence[float]] = None,
                                       hi: Optional[Sequence[float]] = None, samples: Optional[int] = None,
                                       hessian_samples: Optional[int] = None, grid: Optional[int] = None,
                                       verify: bool = True) -> ScalarField:
    """
    f_j = F_{2^-j} + 2^-j·|x|^2.

    Verification on the working box: f_j >= f_{j+1} >= F at quasi-random
    samples and a positive definite Hessian of f_j at a smaller subset.

    Raises:
        InvalidParameterError: j < 1
        VerificationError: monotonicity or positivity fails
    """
    if j < 1:
        raise InvalidParameterError("j must be at least 1", {"j": j})
    f_j = _smoothing_term(F, j, grid)
    if not verify:
        return f_j
    samples = int(pick(samples, "exhaust", "smoothing_samples"))
    hessian_samples = int(pick(hessian_samples, "exhaust", "hessian_samples"))
    lo, hi = _working_box(F.dim, lo, hi)
    X = box_points(samples, lo, hi, seed=0)
    current = f_j.values(X)
    following = _smoothing_term(F, j + 1, grid).values(X)
    base = F.values(X)
    slack = 1e-12 * np.maximum(1.0, np.abs(current))
    bad = np.nonzero((current < following - slack) | (following < base - slack))[0]
    if len(bad):
        i = int(bad[0])
        raise VerificationError("Smoothing sequence is not pointwise decreasing",
                                {"j": j, "x": X[i].tolist(), "f_j": float(current[i]),
                                 "f_next": float(following[i]), "F": float(base[i])})
    smallest = np.linalg.eigvalsh(f_j.hessian_many(X[:hessian_samples]))[:, 0]
    worst = int(np.argmin(smallest))
    if smallest[worst] <= 0.0:
        raise VerificationError("Smoothed function is not strongly convex",
                                {"j": j, "x": X[worst].tolist(), "eigenvalue": float(smallest[worst])})
    return f_j


# Distributional and subharmonic checks

@dataclass
class WeakConvexityResult:
    passed: bool
    values: List[float]
    center: Optional[np.ndarray] = None
    value: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"pass": self.passed, "values": self.values}
        if not self.passed:
            out["certificate"] = {"center": self.center.tolist(), "value": self.value}
        return out


def weak_convexity_test(F: ScalarField, w: Sequence[float], centers: Sequence[Sequence[float]], eps: float,
                        grid: Optional[int] = None, tol: Optional[float] = None) -> WeakConvexityResult:
    """
    Integrals of F against the second w-derivative of the bump centred at
    each center: eps^-2 Σ F(c + eps·u) (w^T D^2 phi(u) w) h^N.

    Raises:
        QuadratureError: the node grid does not integrate the profile to 1
    """
    grid = int(pick(grid, "exhaust", "weak_grid"))
    tol = float(pick(tol, "exhaust", "distributional_tol"))
    if not eps > 0:
        raise InvalidParameterError("eps must be positive", {"eps": eps})
    w = as_point(w, F.dim)
    profile = MollifierProfile(F.dim)
    profile.nodes(grid)
    U, cell = _midpoint_nodes(F.dim, grid)
    kernel = profile.directional_second(U, w) * cell / eps ** 2
    centers = as_points(centers, F.dim)
    values = [float(F.values(c[None, :] + eps * U) @ kernel) for c in centers]
    worst = int(np.argmin(values))
    if values[worst] < -tol:
        return WeakConvexityResult(False, values, centers[worst], values[worst])
    return WeakConvexityResult(True, values)


def subharmonicity_check(F: ScalarField, samples: Optional[int] = None, lo: Optional[Sequence[float]] = None,
                         hi: Optional[Sequence[float]] = None, seed: int = 0) -> Dict[str, Any]:
    """
    Laplacian >= -tol at samples, and F(x) <= its mean over small spheres.

    Midpoint convexity is checked alongside, so harmonic non-convex
    functions come back as "subharmonic but not convex".
    """
    samples = int(pick(samples, "exhaust", "hessian_samples"))
    tol = float(pick(None, "exhaust", "laplacian_tol"))
    radius = float(pick(None, "exhaust", "sphere_radius"))
    half = max(1, int(pick(None, "exhaust", "sphere_points")) // 2)
    lo, hi = _working_box(F.dim, lo, hi)
    X = box_points(samples, lo, hi, seed)
    laplacian = np.trace(F.hessian_many(X), axis1=1, axis2=2)

    U = sphere_directions(half, F.dim, seed=0)
    U = np.vstack([U, -U])
    Y = X[: min(100, samples)]
    ring = F.values((Y[:, None, :] + radius * U[None, :, :]).reshape(-1, F.dim)).reshape(len(Y), len(U))
    centre = F.values(Y)
    gap = ring.mean(axis=1) - centre
    slack = 1e-10 * np.maximum(1.0, np.abs(centre))

    P, Q = X[: samples // 2], X[samples // 2: 2 * (samples // 2)]
    convex = midpoint_convexity_check(F, P, Q).passed if len(P) else True
    subharmonic = bool(np.all(laplacian >= -tol) and np.all(gap >= -slack))
    if subharmonic:
        verdict = "convex" if convex else "subharmonic but not convex"
    else:
        verdict = "not subharmonic"
    return {
        "samples": samples,
        "laplacian_min": float(laplacian.min()),
        "sphere_gap_min": float(gap.min()),
        "subharmonic": subharmonic,
        "convex": bool(convex),
        "verdict": verdict,
    }


# Smoothed exhaustion and sublevel decomposition

class GridMollifiedField(ScalarField):
    """
    Lattice convolution of F with the scaled bump plus delta·|x|^2.

    F is sampled once on a lattice of spacing eps/ratio and capped at
    ``cap``; values, gradients and Hessians are then exact sums against the
    profile and its derivatives. Lattice nodes outside the stored box count
    as ``cap``. The lattice itself is what ``to_json`` stores, so a loaded
    field evaluates exactly like the one that was saved.
    """

    def __init__(self, F: ScalarField, eps: float, lo: Sequence[float], hi: Sequence[float], cap: float,
                 ratio: Optional[int] = None, delta: Optional[float] = None,
                 max_lattice: Optional[int] = None, debug: Optional[Debug] = None):
        ratio = int(pick(ratio, "exhaust", "sublevel_lattice_ratio"))
        delta = float(pick(delta, "exhaust", "sublevel_delta"))
        spacing = float(eps) / ratio
        origin = np.asarray(lo, dtype=float) - eps
        shape = np.ceil((np.asarray(hi, dtype=float) + eps - origin) / spacing).astype(int) + 1
        total = int(np.prod(shape))
        max_lattice = int(pick(max_lattice, "exhaust", "sublevel_max_lattice"))
        if total > max_lattice:
            raise InvalidParameterError("Smoothing lattice too large", {"nodes": total, "max": max_lattice})
        axes = [origin[i] + spacing * np.arange(shape[i]) for i in range(F.dim)]
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, F.dim)
        if debug:
            debug.log(f"Sampling {F.name} on {total} lattice nodes (spacing {spacing:.3g})", category="exhaust")
        if isinstance(F, ExhaustionFunction):
            values = F.values_capped(nodes, cap)
        else:
            values = F.values(nodes)
            values = np.where(np.isfinite(values), np.minimum(values, cap), cap)
        self._install(F.dim, f"smoothed({F.name})", eps, ratio, delta, cap, origin, shape, values, F.describe())

    def _install(self, dim: int, name: str, eps: float, ratio: int, delta: float, cap: float,
                 origin: np.ndarray, shape: np.ndarray, values: np.ndarray, base: Dict[str, Any]) -> None:
        ScalarField.__init__(self, dim, SMOOTH, name)
        self.eps = float(eps)
        self.ratio = int(ratio)
        self.delta = float(delta)
        self.cap = float(cap)
        self.base = base
        self.profile = MollifierProfile(dim)
        self.spacing = self.eps / self.ratio
        self.origin = np.asarray(origin, dtype=float)
        self.shape = np.asarray(shape, dtype=int)
        self.lattice_values = np.asarray(values, dtype=float)
        width = 2 * self.ratio + 2
        self.offsets = np.stack(np.meshgrid(*([np.arange(width)] * dim), indexing="ij"),
                                axis=-1).reshape(-1, dim)
        self.block = max(1, (1 << 20) // len(self.offsets))
        self.norm = float(self.ratio) ** (-dim)
        self._encoded: Optional[str] = None

    def _window(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        base = np.floor((X - self.origin) / self.spacing).astype(int) - self.ratio
        idx = base[:, None, :] + self.offsets[None, :, :]
        Z = (X[:, None, :] - (self.origin + idx * self.spacing)) / self.eps
        stored = np.all((idx >= 0) & (idx < self.shape), axis=2)
        clipped = np.clip(idx, 0, self.shape - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(clipped, 2, 0)), tuple(self.shape))
        V = np.where(stored, self.lattice_values[flat], self.cap)
        return Z.reshape(-1, self.dim), V

    def _values_block(self, X: np.ndarray) -> np.ndarray:
        Z, V = self._window(X)
        phi = self.profile.values(Z).reshape(V.shape)
        return self.norm * np.einsum("mk,mk->m", V, phi) + self.delta * np.einsum("ij,ij->i", X, X)

    def _gradient_block(self, X: np.ndarray) -> np.ndarray:
        Z, V = self._window(X)
        grad = self.profile.gradients(Z).reshape(V.shape + (self.dim,))
        return self.norm / self.eps * np.einsum("mk,mkn->mn", V, grad) + 2.0 * self.delta * X

    def _hessian_block(self, X: np.ndarray) -> np.ndarray:
        Z, V = self._window(X)
        hess = self.profile.hessians(Z).reshape(V.shape + (self.dim, self.dim))
        H = self.norm / self.eps ** 2 * np.einsum("mk,mkab->mab", V, hess)
        return H + 2.0 * self.delta * np.eye(self.dim)[None, :, :]

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return chunked_apply(self._values_block, X, size=self.block)

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return chunked_apply(self._gradient_block, X, size=self.block)

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        return chunked_apply(self._hessian_block, X, size=self.block)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "eps": self.eps, "ratio": self.ratio, "delta": self.delta,
                "cap": self.cap, "origin": self.origin.tolist(), "lattice": self.shape.tolist(),
                "base": self.base}

    def to_json(self) -> Dict[str, Any]:
        """Loadable form; lattice values travel as zlib-compressed little-endian float64."""
        if self._encoded is None:
            raw = np.ascontiguousarray(self.lattice_values, dtype="<f8").tobytes()
            self._encoded = base64.b64encode(zlib.compress(raw, 6)).decode("ascii")
        return {"kind": "lattice_mollified", "name": self.name, "dim": self.dim, "eps": self.eps,
                "ratio": self.ratio, "delta": self.delta, "cap": self.cap, "origin": self.origin.tolist(),
                "lattice": self.shape.tolist(), "values": self._encoded, "base": self.base}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "GridMollifiedField":
        try:
            dim = int(obj["dim"])
            origin = np.asarray(obj["origin"], dtype=float)
            shape = np.asarray(obj["lattice"], dtype=int)
            values = np.frombuffer(zlib.decompress(base64.b64decode(obj["values"])), dtype="<f8").copy()
            settings = (float(obj["eps"]), int(obj["ratio"]), float(obj["delta"]), float(obj["cap"]))
        except (KeyError, TypeError, ValueError, zlib.error) as e:
            raise InvalidParameterError(f"Malformed lattice field JSON: {e}")
        if origin.shape != (dim,) or shape.shape != (dim,) or len(values) != int(np.prod(shape)):
            raise DimensionMismatchError("Lattice field JSON has inconsistent sizes",
                                         {"dim": dim, "lattice": shape.tolist(), "values": int(len(values))})
        field = cls.__new__(cls)
        field._install(dim, obj.get("name", "smoothed"), *settings, origin, shape, values, obj.get("base", {}))
        return field


def _sublevel_box(E: ExhaustionFunction, c_max: float, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = E.shape.bbox
    if E.exhaustion_kind is ExhaustionKind.MAX_FORM:
        # |x|^2 <= E <= c_max on every sublevel
        reach = math.sqrt(max(c_max, 0.0)) + 2.0 * eps
        lo, hi = np.maximum(lo, -reach), np.minimum(hi, reach)
    return lo, hi


def smooth_exhaustion(E: ExhaustionFunction, c_max: float, eps: Optional[float] = None,
                      debug: Optional[Debug] = None) -> GridMollifiedField:
    """
    Mollify E at scale eps = min(cap, e^-c_max / 2) on a lattice covering
    every sublevel up to c_max.
    """
    eps_cap = float(pick(None, "exhaust", "sublevel_eps_cap"))
    eps = min(eps_cap, math.exp(-c_max) / 2.0) if eps is None else float(eps)
    lo, hi = _sublevel_box(E, c_max, eps)
    return GridMollifiedField(E, eps, lo, hi, cap=c_max + 1.0, debug=debug)


@dataclass
class SublevelDecomposition:
    """Nested domains {E_smoothed < c_j} with their verification records."""

    levels: List[float]
    domains: List[DomainSpec]
    records: List[Dict[str, Any]]
    smoothed: GridMollifiedField
    coverage: float = 0.0

    def __iter__(self):
        return iter(self.domains)

    def __len__(self) -> int:
        return len(self.domains)

    def __getitem__(self, i: int) -> DomainSpec:
        return self.domains[i]

    def to_dict(self) -> Dict[str, Any]:
        return {"levels": self.levels, "eps": self.smoothed.eps, "delta": self.smoothed.delta,
                "coverage": self.coverage, "records": self.records}


def sublevel_decomposition(E: ExhaustionFunction, levels: Sequence[float], boundary_samples: Optional[int] = None,
                           eps: Optional[float] = None, debug: Optional[Debug] = None) -> SublevelDecomposition:
    """
    Nested strongly convex domains {E_smoothed < c_j}.

    Per level: boundary samples from the sublevel domain must have gradient
    norm above the critical-level bound, classify StronglyConvex, stay at
    distance >= e^-c / 2 from the original boundary and lie inside the next
    level.

    Raises:
        InvalidParameterError: levels are not strictly increasing
        CriticalLevelError: a level is empty or too close to a critical value
        VerificationError: a sampled boundary point fails a check
    """
    levels = [float(c) for c in levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidParameterError("Levels must be strictly increasing", {"levels": levels})
    boundary_samples = int(pick(boundary_samples, "exhaust", "sublevel_boundary_samples"))
    min_gradient = float(pick(None, "exhaust", "min_level_gradient"))
    smoothed = smooth_exhaustion(E, levels[-1], eps, debug)
    lo, hi = _sublevel_box(E, levels[-1], smoothed.eps)

    domains: List[DomainSpec] = []
    records: List[Dict[str, Any]] = []
    previous: Optional[np.ndarray] = None
    for c in progress(levels, "sublevels", debug):
        rho = SumField([smoothed], constant=-c, name=f"{smoothed.name}-{c:g}")
        dom = DomainSpec(rho, (lo, hi), smoothness=SMOOTH, name=f"{E.shape.name}:sublevel({c:g})")
        try:
            points = sample_boundary(dom, boundary_samples, seed=0, debug=debug)
        except NoInteriorPointError:
            points = []
        if not points:
            raise CriticalLevelError("Sublevel set is empty", {"level": c})
        locations = np.array([bp.location for bp in points])
        gradient_min = min(bp.gradient_norm for bp in points)
        if gradient_min < min_gradient:
            raise CriticalLevelError("Level is too close to a critical value",
                                     {"level": c, "gradient_min": gradient_min, "bound": min_gradient})
        verdicts = [classify_point(dom, bp) for bp in points]
        weak = [v for v in verdicts if v.convexity_class is not ConvexityClass.STRONGLY_CONVEX]
        if weak:
            raise VerificationError("Sublevel boundary is not strongly convex",
                                    {"level": c, "verdict": weak[0].to_dict()})
        distances = distance_many(E.shape, locations)
        margin = math.exp(-c) / 2.0 - 1e-6
        if distances.min() < margin:
            raise VerificationError("Sublevel set is not compactly contained",
                                    {"level": c, "min_distance": float(distances.min()), "margin": margin})
        if previous is not None and not np.all(dom.contains(previous)):
            raise VerificationError("Sublevel sets are not nested", {"level": c})
        previous = locations
        domains.append(dom)
        records.append({
            "level": c,
            "samples": len(points),
            "gradient_min": float(gradient_min),
            "min_eigenvalue": float(min(v.min_tangential_eigenvalue for v in verdicts)),
            "min_distance": float(distances.min()),
            "spec_hash": dom.spec_hash,
        })
        if debug:
            debug.log(f"level {c:g}: {len(points)} strongly convex boundary samples", category="exhaust")

    tests = interior_samples(E.shape, 200, seed=1)
    coverage = float(np.mean(domains[-1].contains(tests)))
    return SublevelDecomposition(levels, domains, records, smoothed, coverage)

"""
Pointwise analytic convexity and its consequences.

Verdicts come from the Hessian of the defining function restricted to the
tangent space at a boundary point. Around them sit the geometric segment
oracle, defining-function independence, the exponential strong
convexification, Taylor witnesses of non-convexity, inner strongly convex
approximations and affine transforms of domains.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..common.cache import GEOMETRY_CACHE
from ..common.config import pick
from ..common.partition import ordered_map
from ..common.seed import box_points, make_rng, sphere_directions
from ..domains.domain import BoundaryPoint, DomainSpec, multiply_by_h, sample_boundary, tangent_basis
from ..domains.shapes import Shape
from ..fields.base import ScalarField, as_point, as_points
from ..fields.composite import AffinePullback, ExpConvexified, SumField
from ..fields.polynomial import Polynomial
from ..utils.constants import TANGENCY_TOL
from ..utils.debug import Debug, progress
from ..utils.errors import (
    DimensionMismatchError,
    InconclusiveWitnessError,
    InvalidParameterError,
    NoInteriorPointError,
    NotConvexDomainError,
    NotStronglyConvexError,
    NotTangentError,
    SingularTransformError,
    VerificationError,
)

PointLike = Union[BoundaryPoint, Sequence[float], np.ndarray]


class ConvexityClass(str, Enum):
    """
    Pointwise classes, ordered from worst to best.

    NOT_CONVEX: some tangent direction has a negative form value
    WEAKLY_CONVEX: the restricted form is positive semi-definite
    STRONGLY_CONVEX: the restricted form is positive definite
    """

    NOT_CONVEX = "NotConvex"
    WEAKLY_CONVEX = "WeaklyConvex"
    STRONGLY_CONVEX = "StronglyConvex"

    @property
    def is_convex(self) -> bool:
        return self is not ConvexityClass.NOT_CONVEX


@dataclass
class ConvexityVerdict:
    location: np.ndarray
    convexity_class: ConvexityClass
    min_tangential_eigenvalue: float
    eigenvalues: np.ndarray
    strict_tol: float
    witness: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.location.tolist(),
            "class": self.convexity_class.value,
            "min_tangential_eigenvalue": float(self.min_tangential_eigenvalue),
            "witness": None if self.witness is None else self.witness.tolist(),
        }


@dataclass
class ConvexificationResult:
    lam: float
    rho_tilde: ScalarField
    certified_C: float
    boundary_min_eigenvalue: float
    domain: DomainSpec
    samples: int
    doublings: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": float(self.lam),
            "certified_C": float(self.certified_C),
            "boundary_min_eigenvalue": float(self.boundary_min_eigenvalue),
            "samples": self.samples,
            "doublings": self.doublings,
        }


@dataclass
class OracleResult:
    convex: bool
    pairs: int
    segment: Optional[Tuple[np.ndarray, np.ndarray]] = None
    violation: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"verdict": "Convex" if self.convex else "NotConvex", "pairs": self.pairs}
        if self.segment is not None:
            out["witness"] = {
                "p": self.segment[0].tolist(),
                "q": self.segment[1].tolist(),
                "outside": self.violation.tolist(),
            }
        return out


@dataclass
class WitnessResult:
    t: float
    eps: float
    q_out: np.ndarray
    q_in: np.ndarray
    K: float

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "eps": self.eps, "q_out": self.q_out.tolist(), "q_in": self.q_in.tolist(), "K": self.K}


@dataclass
class CheckResult:
    """Outcome of a sampled convex-function check."""

    passed: bool
    worst: float
    samples: int
    certificate: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"pass": self.passed, "worst": float(self.worst), "samples": self.samples,
                "certificate": self.certificate}


def boundary_point(d: DomainSpec, P: PointLike) -> BoundaryPoint:
    if isinstance(P, BoundaryPoint):
        return P
    return tangent_basis(d, P)


def _unit(w: Sequence[float], dim: int) -> np.ndarray:
    w = as_point(w, dim)
    length = np.linalg.norm(w)
    if length == 0.0:
        raise InvalidParameterError("Direction must be non-zero")
    return w / length


def _sign_normalized(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def restricted_form(d: DomainSpec, P: PointLike, w: Sequence[float]) -> float:
    """
    Hessian quadratic form w^T H(P) w for a tangent direction w.

    Raises:
        NotTangentError: |grad rho · w| > 1e-6 |grad rho| |w|
    """
    bp = boundary_point(d, P)
    w = as_point(w, d.dim)
    g = d.rho.gradient(bp.location)
    if abs(g @ w) > TANGENCY_TOL * np.linalg.norm(g) * np.linalg.norm(w):
        raise NotTangentError("Direction is not tangent to the boundary",
                              {"point": bp.location.tolist(), "w": w.tolist(), "grad_dot_w": float(g @ w)})
    return float(w @ d.rho.hessian(bp.location) @ w)


def classify_point(d: DomainSpec, P: PointLike, strict_tol: Optional[float] = None) -> ConvexityVerdict:
    """
    Verdict from the eigenvalues of B H B^T, B the tangent basis.

    The threshold separating weak from strong is ``strict_tol``·|H|_2.
    """
    bp = boundary_point(d, P)
    H = d.rho.hessian(bp.location)
    B = bp.tangent_basis
    form = B @ H @ B.T
    values, vectors = np.linalg.eigh(0.5 * (form + form.T))
    tol = float(pick(strict_tol, "convexity", "strict_tol")) * float(np.linalg.norm(H, 2))
    smallest = float(values[0])
    witness = None
    if smallest > tol:
        klass = ConvexityClass.STRONGLY_CONVEX
    elif smallest >= -tol:
        klass = ConvexityClass.WEAKLY_CONVEX
    else:
        klass = ConvexityClass.NOT_CONVEX
        witness = _sign_normalized(B.T @ vectors[:, 0])
    return ConvexityVerdict(bp.location, klass, smallest, values, tol, witness)


def classify_boundary(d: DomainSpec, count: Optional[int] = None, seed: int = 0,
                      debug: Optional[Debug] = None) -> List[ConvexityVerdict]:
    count = int(pick(count, "convexity", "boundary_samples"))
    points = sample_boundary(d, count, seed, debug=debug)
    return ordered_map(lambda bp: classify_point(d, bp), points)


def geometric_convexity_oracle(shape: Shape, pairs: Optional[int] = None, seed: int = 0,
                               segment_samples: Optional[int] = None) -> OracleResult:
    """
    Check that segments between quasi-random interior points stay inside.

    Works on any Shape. Returns the lowest-index violating segment, if any.

    Raises:
        NoInteriorPointError: fewer than two interior points were found
    """
    pairs = int(pick(pairs, "convexity", "oracle_pairs"))
    segment_samples = int(pick(segment_samples, "convexity", "segment_samples"))
    if pairs < 1:
        raise InvalidParameterError("pairs must be at least 1", {"pairs": pairs})
    P, Q = interior_pairs(shape, pairs, seed)
    t = np.linspace(0.0, 1.0, segment_samples)
    for start in range(0, pairs, 1024):
        stop = min(pairs, start + 1024)
        segments = P[start:stop, None, :] + t[None, :, None] * (Q[start:stop] - P[start:stop])[:, None, :]
        ok = shape.contains(segments.reshape(-1, shape.dim)).reshape(stop - start, segment_samples)
        bad = np.nonzero(~ok.all(axis=1))[0]
        if len(bad):
            i = int(bad[0])
            j = int(np.argmin(ok[i]))
            return OracleResult(False, pairs, (P[start + i], Q[start + i]), segments[i, j])
    return OracleResult(True, pairs)


def shape_key(shape: Shape) -> str:
    """Cache namespace of a shape: the spec hash for smooth domains."""
    if isinstance(shape, DomainSpec):
        return shape.spec_hash
    return f"{type(shape).__name__}:{json.dumps(shape.describe(), sort_keys=True)}"


def require_convex(shape: Shape, pairs: Optional[int] = None) -> OracleResult:
    """
    Run the segment oracle once per shape and refuse non-convex shapes.

    Raises:
        NotConvexDomainError: the oracle found a segment leaving the shape
    """
    def compute() -> OracleResult:
        return geometric_convexity_oracle(shape, pairs=pairs, seed=0)

    result = GEOMETRY_CACHE.namespace(shape_key(shape))(f"oracle.{pairs}", compute)
    if not result.convex:
        raise NotConvexDomainError(f"'{shape.name}' is not convex", result.to_dict())
    return result


def random_positive_multipliers(dim: int, count: int = 5, seed: int = 0) -> List[Polynomial]:
    """
    Polynomials h = 1 + a·|x|^2 + (b·x)^2 + c·x_1 with |c| <= 0.2, hence
    positive wherever |x_1| < 5.
    """
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        a = rng.uniform(0.1, 1.0)
        b = rng.normal(size=dim) * 0.5
        c = rng.uniform(-0.2, 0.2)
        h = 1.0 + a * Polynomial.norm_squared(dim) + Polynomial.linear(b) ** 2 + Polynomial.linear(
            [c] + [0.0] * (dim - 1))
        out.append(h)
    return out


def defining_function_independence(d: DomainSpec, h: ScalarField, samples: int = 50) -> Dict[str, Any]:
    """
    Compare verdict classes under rho and h·rho at sampled boundary points.
    """
    other = multiply_by_h(d, h)
    points = sample_boundary(d, samples, seed=0)
    tol = max(d.boundary_tol, other.boundary_tol) * 10.0

    def compare(bp: BoundaryPoint) -> Dict[str, Any]:
        before = classify_point(d, bp)
        after = classify_point(other, tangent_basis(other, bp.location, tol=tol))
        return {
            "point": bp.location.tolist(),
            "class_rho": before.convexity_class.value,
            "class_h_rho": after.convexity_class.value,
            "eig_rho": before.min_tangential_eigenvalue,
            "eig_h_rho": after.min_tangential_eigenvalue,
        }

    rows = ordered_map(compare, points)
    disagreements = [r for r in rows if r["class_rho"] != r["class_h_rho"]]
    return {"samples": len(rows), "agree": not disagreements, "disagreements": disagreements, "points": rows}


def _form_candidates(H: np.ndarray, sphere: np.ndarray) -> np.ndarray:
    _, vectors = np.linalg.eigh(H)
    return np.vstack([sphere, vectors.T, -vectors.T])


def strong_convexify(d: DomainSpec, sphere_samples: Optional[int] = None,
                     boundary_samples: Optional[int] = None, collar: Optional[float] = None,
                     max_doublings: int = 20, debug: Optional[Debug] = None) -> ConvexificationResult:
    """
    Find lambda so rho_lambda = (exp(lambda·rho) - 1)/lambda has a positive
    definite Hessian on the sampled boundary and its collar.

    Per sample P, X_P = {|w| = 1 : w^T H w <= 0} is approximated on sphere
    samples plus Hessian eigenvectors; lambda_P = -min form / mu^2 + 1 with
    mu = min |grad rho · w| over X_P.

    Raises:
        NotStronglyConvexError: a sample is not strongly convex or mu vanishes
        VerificationError: no lambda passed the eigenvalue check
    """
    sphere_samples = int(pick(sphere_samples, "convexity", "sphere_samples"))
    boundary_samples = int(pick(boundary_samples, "convexity", "boundary_samples"))
    collar = float(pick(collar, "convexity", "collar"))
    degenerate_mu = float(pick(None, "convexity", "degenerate_mu"))

    points = sample_boundary(d, boundary_samples, seed=0, debug=debug)
    for verdict in ordered_map(lambda bp: classify_point(d, bp), points):
        if verdict.convexity_class is not ConvexityClass.STRONGLY_CONVEX:
            raise NotStronglyConvexError(
                "Boundary sample is not strongly convex",
                {"point": verdict.location.tolist(), "class": verdict.convexity_class.value,
                 "min_tangential_eigenvalue": verdict.min_tangential_eigenvalue},
            )

    sphere = sphere_directions(sphere_samples, d.dim, seed=0)
    locations = np.array([bp.location for bp in points])
    gradients = d.rho.gradient_many(locations)
    hessians = d.rho.hessian_many(locations)
    lam = 1.0
    for i in progress(range(len(points)), "X_P sampling", debug):
        W = _form_candidates(hessians[i], sphere)
        form = np.einsum("ki,ij,kj->k", W, hessians[i], W)
        in_X = form <= 0.0
        if not np.any(in_X):
            continue
        mu = float(np.min(np.abs(W[in_X] @ gradients[i])))
        if mu <= degenerate_mu:
            raise NotStronglyConvexError(
                "A non-positive form direction is tangent: mu vanishes",
                {"point": locations[i].tolist(), "mu": mu},
            )
        lam = max(lam, -float(form[in_X].min()) / mu ** 2 + 1.0)

    normals = np.array([bp.normal for bp in points])
    probes = np.concatenate([locations, locations + collar * normals, locations - collar * normals])
    for doubling in range(max_doublings + 1):
        rho_tilde = ExpConvexified(d.rho, lam)
        smallest = np.linalg.eigvalsh(rho_tilde.hessian_many(probes))[:, 0]
        if smallest.min() > 0.0:
            if debug:
                debug.log(f"lambda = {lam:.6g} certified after {doubling} doubling(s)", category="convexity")
            domain = DomainSpec(rho_tilde, d.bbox, d.smoothness, name=f"{d.name}_lambda")
            return ConvexificationResult(
                lam=lam,
                rho_tilde=rho_tilde,
                certified_C=float(smallest.min()),
                boundary_min_eigenvalue=float(smallest[: len(points)].min()),
                domain=domain,
                samples=len(points),
                doublings=doubling,
            )
        lam *= 2.0
    raise VerificationError("No lambda produced a positive definite Hessian on the samples",
                            {"lambda": lam, "min_eigenvalue": float(smallest.min())})


def nonconvexity_witness(d: DomainSpec, P: PointLike, w: Sequence[float], eps_start: Optional[float] = None,
                         eps_floor: Optional[float] = None) -> WitnessResult:
    """
    Taylor witness: with K = -form/(2|grad rho|) and t = sqrt(2 eps/K),
    Q0 = P + eps·nu lies outside and Qt = P + t·w + eps·nu inside.

    eps halves from ``eps_start`` until both signs are verified.

    Raises:
        InvalidParameterError: the form along w is not negative
        InconclusiveWitnessError: eps reached the floor without a sign pattern
    """
    eps = float(pick(eps_start, "convexity", "witness_eps_start"))
    floor = float(pick(eps_floor, "convexity", "witness_eps_floor"))
    bp = boundary_point(d, P)
    w = _unit(w, d.dim)
    form = restricted_form(d, bp, w)
    if form >= 0.0:
        raise InvalidParameterError("Form along the direction is not negative", {"form": form, "w": w.tolist()})
    K = -form / (2.0 * bp.gradient_norm)
    while eps >= floor:
        t = float(np.sqrt(2.0 * eps / K))
        q_out = bp.location + eps * bp.normal
        q_in = q_out + t * w
        if d.rho.eval(q_out) > 0.0 and d.rho.eval(q_in) < 0.0:
            return WitnessResult(t=t, eps=eps, q_out=q_out, q_in=q_in, K=K)
        eps *= 0.5
    raise InconclusiveWitnessError("No sign pattern found before eps reached the floor",
                                   {"point": bp.location.tolist(), "w": w.tolist(), "K": K, "eps_floor": floor})


def inner_strongly_convex_approx(d: DomainSpec, eps: float, M: int) -> DomainSpec:
    """
    {rho + eps·|x|^(2M)/M < 0}, a subset of Omega shrinking as eps grows.

    Raises:
        NoInteriorPointError: the origin is not in Omega
    """
    if eps <= 0 or M < 1:
        raise InvalidParameterError("Need eps > 0 and M >= 1", {"eps": eps, "M": M})
    if d.rho.eval(np.zeros(d.dim)) >= 0.0:
        raise NoInteriorPointError("The origin is not interior", {"domain": d.name})
    bonus = (eps / M) * Polynomial.norm_squared(d.dim, M)
    rho = d.rho + bonus if isinstance(d.rho, Polynomial) else SumField([d.rho, bonus])
    return DomainSpec(rho, d.bbox, d.smoothness, name=f"{d.name}_inner({eps:g},{M})")


def transform_domain(d: DomainSpec, A: Any, b: Optional[Sequence[float]] = None) -> DomainSpec:
    """
    Image A·Omega + b with defining function rho(A^{-1}(x - b)).

    Polynomials stay polynomials; other fields are wrapped in AffinePullback.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(d.dim) if b is None else as_point(b, d.dim)
    if A.shape != (d.dim, d.dim):
        raise DimensionMismatchError("Transform matrix has the wrong shape", {"shape": list(A.shape)})
    det = float(np.linalg.det(A))
    if abs(det) <= 1e-12:
        raise SingularTransformError("Transform matrix is singular", {"det": det})
    if isinstance(d.rho, Polynomial):
        A_inv = np.linalg.inv(A)
        rho = d.rho.compose_affine(A_inv, -A_inv @ b)
    else:
        rho = AffinePullback(d.rho, A, b)
    lo, hi = d.bbox
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(d.dim, -1).T
    image = corners @ A.T + b
    return DomainSpec(rho, (image.min(axis=0), image.max(axis=0)), d.smoothness, name=f"{d.name}_affine")


def map_point(A: Any, b: Optional[Sequence[float]], P: Sequence[float]) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    P = np.asarray(P, dtype=float)
    return A @ P + (0.0 if b is None else np.asarray(b, dtype=float))


# Convex functions

def hessian_convexity_check(F: ScalarField, lo: Sequence[float], hi: Sequence[float],
                            samples: Optional[int] = None, seed: int = 0, tol: float = 1e-8) -> CheckResult:
    """A C^2 function is convex iff its Hessian is positive semi-definite."""
    samples = int(pick(samples, "exhaust", "hessian_samples"))
    X = box_points(samples, np.asarray(lo, float), np.asarray(hi, float), seed)
    H = F.hessian_many(X)
    spectrum = np.linalg.eigvalsh(H)
    eigs = spectrum[:, 0]
    scale = np.maximum(1.0, np.abs(spectrum).max(axis=1))
    worst = int(np.argmin(eigs / scale))
    passed = bool(np.all(eigs >= -tol * scale))
    return CheckResult(passed, float(eigs[worst]), samples, {"point": X[worst].tolist()})


def midpoint_convexity_check(F: ScalarField, X: np.ndarray, Y: np.ndarray, tol: float = 1e-9) -> CheckResult:
    """
    F((x+y)/2) <= (F(x) + F(y))/2 on the given pairs, up to ``tol`` relative
    to the values involved.
    """
    X = as_points(X, F.dim)
    Y = as_points(Y, F.dim)
    fx, fy = F.values(X), F.values(Y)
    fm = F.values(0.5 * (X + Y))
    gap = fm - 0.5 * (fx + fy)
    scale = np.maximum(1.0, np.maximum(np.abs(fx), np.abs(fy)))
    relative = gap / scale
    worst = int(np.argmax(relative))
    passed = bool(np.all(relative <= tol))
    return CheckResult(passed, float(gap[worst]), len(X), {"x": X[worst].tolist(), "y": Y[worst].tolist()})


def interior_pairs(shape: Shape, pairs: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Quasi-random pairs of interior points of a shape."""
    lo, hi = shape.bbox
    candidates = box_points(max(8 * pairs, 256), lo, hi, seed)
    inside = candidates[shape.contains(candidates)]
    if len(inside) < 2:
        raise NoInteriorPointError("Fewer than two interior points found", {"found": int(len(inside))})
    idx = np.arange(pairs)
    return inside[(2 * idx) % len(inside)], inside[(2 * idx + 1) % len(inside)]

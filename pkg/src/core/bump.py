"""
Outward bumping of planar convex boundaries.

Near a boundary point the domain is the region below a concave graph
x2 = phi(x1). A concave polynomial matching phi to order k at the ends of
a window and raised at the centre replaces phi there; the result stays
convex, contains the original domain and moves the boundary by less than
eps. Flat points are refused with a record of every attempted window.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial as Series
from numpy.polynomial import polynomial as series_ops

from ..common.config import pick
from ..domains.domain import DomainSpec
from ..domains.gallery import flatcap
from ..domains.shapes import Shape
from ..fields.base import ScalarField
from ..fields.composite import PiecewisePower
from ..fields.polynomial import Polynomial
from ..utils.debug import Debug
from ..utils.errors import (
    FlatPointError,
    IndeterminateOrderError,
    InfeasibleBumpError,
    InterpolationError,
    InvalidParameterError,
    NotConvexDomainError,
    VerificationError,
)
from .convexity import geometric_convexity_oracle
from .order import OrderStatus, contact_order


@dataclass
class BumpData:
    """
    Hermite data on [center - a, center + a]: values and k derivatives at
    both ends (alpha left, beta right) plus the target value gamma0 at the centre.
    """

    a: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma0: float
    k: int
    center: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if not self.a > 0:
            raise InvalidParameterError("Half-width must be positive", {"a": self.a})
        if self.k < 1:
            raise InvalidParameterError("Matching order k must be at least 1", {"k": self.k})
        if len(self.alpha) != self.k + 1 or len(self.beta) != self.k + 1:
            raise InvalidParameterError("alpha and beta need k + 1 entries",
                                        {"k": self.k, "alpha": len(self.alpha), "beta": len(self.beta)})

    @property
    def chord_midpoint(self) -> float:
        return 0.5 * (self.alpha[0] + self.beta[0])

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a, "alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "gamma0": self.gamma0,
                "k": self.k, "center": self.center}


def _derivative_row(u: float, j: int, size: int) -> np.ndarray:
    row = np.zeros(size)
    for i in range(j, size):
        row[i] = math.factorial(i) / math.factorial(i - j) * u ** (i - j)
    return row


def bump_polynomial(data: BumpData, zero_orders: Sequence[int] = (), samples: Optional[int] = None,
                    concavity_tol: Optional[float] = None, residual_tol: Optional[float] = None) -> Series:
    """
    Concave polynomial through the Hermite data.

    Solved in u = (x - center)/a, so p is returned as a numpy series with
    domain [center - a, center + a] and window [-1, 1]. ``zero_orders``
    adds p^(j)(center) = 0 conditions.

    Raises:
        InfeasibleBumpError: gamma0 is below the chord midpoint, or p'' > tol somewhere
        InterpolationError: the system is singular or its residual too large
    """
    samples = int(pick(samples, "bump", "concavity_samples"))
    concavity_tol = float(pick(concavity_tol, "bump", "concavity_tol"))
    residual_tol = float(pick(residual_tol, "bump", "residual_tol"))
    if data.gamma0 < data.chord_midpoint:
        raise InfeasibleBumpError("Centre value lies below the chord midpoint",
                                  {"gamma0": data.gamma0, "chord_midpoint": data.chord_midpoint})
    zero_orders = sorted(set(int(j) for j in zero_orders))
    size = 2 * data.k + 3 + len(zero_orders)
    rows, rhs = [], []
    for u, jet in ((-1.0, data.alpha), (1.0, data.beta)):
        for j in range(data.k + 1):
            rows.append(_derivative_row(u, j, size))
            rhs.append(jet[j] * data.a ** j)
    rows.append(_derivative_row(0.0, 0, size))
    rhs.append(data.gamma0)
    for j in zero_orders:
        rows.append(_derivative_row(0.0, j, size))
        rhs.append(0.0)
    A, b = np.array(rows), np.array(rhs)
    try:
        if np.linalg.cond(A) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        q = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise InterpolationError(f"Hermite system is singular: {e}", data.to_dict())
    residual = float(np.max(np.abs(A @ q - b)))
    if residual > residual_tol * max(1.0, float(np.max(np.abs(b)))):
        raise InterpolationError("Hermite residual too large", {"residual": residual, **data.to_dict()})
    for j in zero_orders:
        q[j] = 0.0
    lo, hi = data.center - data.a, data.center + data.a
    p = Series(q, domain=[lo, hi], window=[-1.0, 1.0]).trim(1e-13 * max(1.0, float(np.max(np.abs(q)))))

    t = np.linspace(lo, hi, samples)
    second = p.deriv(2)(t)
    worst = int(np.argmax(second))
    if second[worst] > concavity_tol:
        raise InfeasibleBumpError("Interpolant is not concave",
                                  {"x": float(t[worst]), "second_derivative": float(second[worst]),
                                   "coefficients": p.convert().coef.tolist()})
    return p


def x_coefficients(p: Series) -> np.ndarray:
    """Monomial coefficients of p in x."""
    return p.convert().coef


# Graph domains

def _as_profile(phi: ScalarField, support: Tuple[float, float]) -> PiecewisePower:
    if isinstance(phi, PiecewisePower):
        return phi
    if isinstance(phi, Polynomial) and phi.dim == 1:
        return PiecewisePower([(support[0], support[1], phi, 1.0)], phi.smoothness, phi.name)
    raise InvalidParameterError("Graph profiles must be univariate polynomials or piecewise powers",
                                {"field": phi.name})


@dataclass
class GraphDomain2D:
    """
    Boundary of ``ambient`` near (center, phi(center)) as the graph of a
    concave phi, with the domain below it.
    """

    phi: PiecewisePower
    ambient: Shape
    center: float = 0.0
    window: Optional[float] = None

    def __post_init__(self):
        if self.ambient.dim != 2:
            raise InvalidParameterError("Graph domains are planar", {"dim": self.ambient.dim})
        lo, hi = self.ambient.bbox
        self.phi = _as_profile(self.phi, (float(lo[0]), float(hi[0])))

    @property
    def support(self) -> Tuple[float, float]:
        return self.phi.support

    def value(self, t: Any) -> np.ndarray:
        return self.phi.values(np.atleast_1d(np.asarray(t, dtype=float))[:, None])

    def point(self, t: Optional[float] = None) -> np.ndarray:
        t = self.center if t is None else float(t)
        return np.array([t, float(self.value(t)[0])])

    def jet(self, t: float, k: int) -> np.ndarray:
        return self.phi.derivatives(float(t), k)

    def turning(self, center: float, a: float) -> float:
        left = self.jet(center - a, 1)[1]
        right = self.jet(center + a, 1)[1]
        return abs(math.atan(right) - math.atan(left))

    def require_concave(self, center: float, a: float, samples: Optional[int] = None, tol: float = 1e-10) -> None:
        samples = int(pick(samples, "bump", "graph_concavity_samples"))
        t = np.linspace(center - a, center + a, samples)
        second = np.array([self.jet(x, 2)[2] for x in t])
        worst = int(np.argmax(second))
        if second[worst] > tol:
            raise NotConvexDomainError("Boundary graph is not concave on the window",
                                       {"x": float(t[worst]), "second_derivative": float(second[worst])})

    def windows(self, center: Optional[float] = None) -> List[float]:
        """Admissible half-widths max_half_width·2^-i, largest first."""
        center = self.center if center is None else float(center)
        widest = float(pick(None, "bump", "max_half_width"))
        levels = int(pick(None, "bump", "half_width_levels"))
        max_turning = float(pick(None, "bump", "max_turning"))
        lo, hi = self.support
        out = []
        for i in range(levels):
            a = widest * 2.0 ** (-i)
            if center - a > lo and center + a < hi and self.turning(center, a) < max_turning:
                out.append(a)
        return out

    @classmethod
    def from_separable(cls, d: DomainSpec, center: float = 0.0) -> "GraphDomain2D":
        """
        Upper boundary of A(x1) + b·x2^(2n) < 0, i.e. phi = (-A/b)^(1/(2n)).

        Raises:
            InvalidParameterError: rho is not of that separable form
        """
        rho = d.rho
        if not isinstance(rho, Polynomial) or rho.dim != 2:
            raise InvalidParameterError("from_separable needs a planar polynomial", {"domain": d.name})
        a_terms: Dict[int, float] = {}
        x2_terms = []
        for (i, j), coef in rho.terms():
            if i and j:
                raise InvalidParameterError("Mixed monomials are not separable", {"exp": [i, j]})
            if j:
                x2_terms.append((j, coef))
            else:
                a_terms[i] = a_terms.get(i, 0.0) + coef
        if len(x2_terms) != 1 or x2_terms[0][0] % 2 or x2_terms[0][1] <= 0:
            raise InvalidParameterError("Need a single positive even power of x2", {"terms": x2_terms})
        power, b = x2_terms[0]
        coefficients = np.zeros(max(a_terms) + 1)
        for i, coef in a_terms.items():
            coefficients[i] = -coef / b
        q = Polynomial.univariate(coefficients.tolist())
        if float(q.values([[center]])[0]) <= 0:
            raise InvalidParameterError("Centre is outside the graph's range", {"center": center})
        lo, hi = d.bbox
        left, right = float(lo[0]), float(hi[0])
        for root in series_ops.polyroots(coefficients):
            if abs(root.imag) < 1e-12:
                r = float(root.real)
                if r < center:
                    left = max(left, r)
                elif r > center:
                    right = min(right, r)
        phi = PiecewisePower([(left, right, q, 1.0 / power)], d.smoothness, f"graph({d.name})")
        return cls(phi, d, center)


def flatcap_graph(center: float = 0.0) -> GraphDomain2D:
    """Upper boundary of the flatcap domain: flat for |x1| <= 1/4."""
    d = flatcap()
    w = float(d.rho.params["flat_half_width"])
    reach = w + 1.0 - 1e-9
    left = Polynomial.univariate([1.0 - w ** 4, -4.0 * w ** 3, -6.0 * w ** 2, -4.0 * w, -1.0])
    right = Polynomial.univariate([1.0 - w ** 4, 4.0 * w ** 3, -6.0 * w ** 2, 4.0 * w, -1.0])
    pieces = [
        (-reach, -w, left, 0.5),
        (-w, w, Polynomial.univariate([1.0]), 1.0),
        (w, reach, right, 0.5),
    ]
    return GraphDomain2D(PiecewisePower(pieces, 3, "graph(flatcap)"), d, center)


class BumpedDomain(Shape):
    """
    ``ambient`` with its top boundary replaced by p over the window column.

    The column is |x1 - center| < a above the band floor min(phi) - a.
    """

    def __init__(self, graph: GraphDomain2D, p: Series, center: float, a: float, eps: float):
        self.graph = graph
        self.ambient = graph.ambient
        self.p = p
        self.center = float(center)
        self.a = float(a)
        self.name = f"{self.ambient.name}+bump"
        t = np.linspace(center - a, center + a, 257)
        self.floor = float(graph.value(t).min()) - a
        lo, hi = self.ambient.bbox
        hi = hi.copy()
        hi[1] = max(hi[1], float(p(t).max()) + eps)
        self._bbox = (lo, hi)

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return self._bbox

    def _column(self, X: np.ndarray) -> np.ndarray:
        return (np.abs(X[:, 0] - self.center) < self.a) & (X[:, 1] > self.floor)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = self.ambient.contains(X)
        col = self._column(X)
        out[col] = X[col, 1] < self.p(X[col, 0])
        return out

    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        X = np.atleast_2d(X)
        out = self.ambient.contains_closed(X, tol)
        col = self._column(X)
        out[col] = X[col, 1] <= self.p(X[col, 0]) + tol
        return out

    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        B = np.array(self.ambient.boundary_points(count, seed), dtype=float)
        col = self._column(B)
        B[col, 1] = self.p(B[col, 0])
        return B

    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        samples = self.boundary_points(2048)
        diff = X[:, None, :] - samples[None, :, :]
        return np.sqrt(np.einsum("mkn,mkn->mk", diff, diff)).min(axis=1)

    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if self._column(P[None, :])[0]:
            n = np.array([-float(self.p.deriv(1)(P[0])), 1.0])
            return n / np.linalg.norm(n)
        return self.ambient.normal_at(P)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "center": self.center, "half_width": self.a,
                "coefficients": x_coefficients(self.p).tolist()}


@dataclass
class BumpResult:
    graph: GraphDomain2D
    domain: BumpedDomain
    polynomial: Series
    center: float
    half_width: float
    eps: float
    hausdorff: float
    checks: Dict[str, Any] = field(default_factory=dict)
    order: Optional[int] = None

    def coefficients_json(self) -> str:
        return json.dumps({"center": self.center, "half_width": self.half_width,
                           "coefficients": x_coefficients(self.polynomial).tolist()}, sort_keys=True, indent=2)

    def polyline_csv(self, samples: int = 257) -> str:
        t = np.linspace(self.center - self.half_width, self.center + self.half_width, samples)
        phi = self.domain.graph.value(t)
        bumped = self.polynomial(t)
        lines = ["x1,phi,bumped"] + [f"{a!r},{b!r},{c!r}" for a, b, c in zip(t.tolist(), phi.tolist(), bumped.tolist())]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "center": self.center,
            "half_width": self.half_width,
            "eps": self.eps,
            "hausdorff": self.hausdorff,
            "coefficients": x_coefficients(self.polynomial).tolist(),
            "checks": self.checks,
        }
        if self.order is not None:
            out["order"] = self.order
        return out


def _chord_witness(domain: BumpedDomain, p: Series, lo: float, hi: float, samples: int) -> Dict[str, Any]:
    """Two points under the graph whose midpoint lies above it."""
    t = np.linspace(lo, hi, samples)
    v = p(t)
    best = (0.0, 0, 0)
    for m in range(1, samples // 4):
        gaps = 0.5 * (v[:-2 * m] + v[2 * m:]) - v[m:-m]
        i = int(np.argmax(gaps))
        if gaps[i] > best[0]:
            best = (float(gaps[i]), i + m, m)
    gap, i, m = best
    if gap <= 0:
        return {}
    drop = 0.5 * gap
    a = np.array([t[i - m], v[i - m] - drop])
    b = np.array([t[i + m], v[i + m] - drop])
    mid = 0.5 * (a + b)
    inside = domain.contains(np.vstack([a, b, mid]))
    return {"p": a.tolist(), "q": b.tolist(), "outside": mid.tolist(), "gap": gap,
            "verified": bool(inside[0] and inside[1] and not inside[2])}


def _center_order(p: Series, center: float, limit: int = 16, tol: float = 1e-12) -> Optional[int]:
    """Index of the first nonzero derivative of p at the centre, from 2 on."""
    scale = max(1.0, float(np.max(np.abs(p.coef))))
    for j in range(2, limit + 1):
        if abs(float(p.deriv(j)(center))) > tol * scale:
            return j
    return None


def _candidate(g: GraphDomain2D, center: float, a: float, eps: float, k: int, zero_orders: Sequence[int],
               max_order: Optional[int]) -> Tuple[Optional[BumpResult], Dict[str, Any]]:
    """One window: the bump result, or None with a failure record."""
    fraction = float(pick(None, "bump", "apex_fraction"))
    samples = int(pick(None, "bump", "concavity_samples"))
    base = float(g.value(center)[0])
    data = BumpData(a, g.jet(center - a, k), g.jet(center + a, k), base + fraction * eps, k, center)
    failure: Dict[str, Any] = {"half_width": a}
    try:
        p = bump_polynomial(data, zero_orders)
    except InfeasibleBumpError as e:
        raw = Series(np.array(e.details.get("coefficients", [data.gamma0])))
        failure.update({"reason": "not concave", **e.details})
        if "coefficients" in e.details:
            failure["witness"] = _chord_witness(BumpedDomain(g, raw, center, a, eps), raw,
                                                center - a, center + a, samples)
        return None, failure
    domain = BumpedDomain(g, p, center, a, eps)
    t = np.linspace(center - a, center + a, samples)
    excess = p(t) - g.value(t)
    lowest = int(np.argmin(excess))
    if excess[lowest] < -1e-10:
        x = float(t[lowest])
        failure.update({"reason": "does not contain the original domain",
                        "witness": {"point": [x, float(g.value(x)[0]) - 0.5 * abs(float(excess[lowest]))]}})
        return None, failure
    hausdorff = float(excess.max())
    if hausdorff >= eps:
        failure.update({"reason": "Hausdorff bound", "hausdorff": hausdorff})
        return None, failure
    order = _center_order(p, center)
    if max_order is not None and (order is None or order > max_order):
        failure.update({"reason": "bumped centre order exceeds the original order", "order": order})
        return None, failure
    checks = {"concave": True, "hausdorff": hausdorff, "center_interior": bool(domain.contains(g.point(center))[0])}
    if not checks["center_interior"]:
        failure.update({"reason": "centre not interior"})
        return None, failure
    grid = int(pick(None, "bump", "membership_grid"))
    lo, hi = g.ambient.bbox
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(2)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    lost = g.ambient.contains(X) & ~domain.contains(X)
    checks["contains_original"] = not bool(lost.any())
    if lost.any():
        failure.update({"reason": "does not contain the original domain", "witness": {"point": X[lost][0].tolist()}})
        return None, failure
    oracle = geometric_convexity_oracle(domain)
    checks["oracle"] = oracle.to_dict()
    if not oracle.convex:
        failure.update({"reason": "bumped domain not convex", "witness": oracle.to_dict()})
        return None, failure
    pieces = []
    for lo_i, hi_i, q, alpha in g.phi.pieces:
        if lo_i < center - a:
            pieces.append((lo_i, min(hi_i, center - a), q, alpha))
        if hi_i > center + a:
            pieces.append((max(lo_i, center + a), hi_i, q, alpha))
    pieces.append((center - a, center + a, Polynomial.univariate(x_coefficients(p).tolist()), 1.0))
    profile = PiecewisePower(pieces, min(k, g.phi.smoothness), f"{g.phi.name}+bump")
    graph = GraphDomain2D(profile, domain, center, a)
    return BumpResult(graph, domain, p, center, a, eps, hausdorff, checks, order), failure


def _bump(g: GraphDomain2D, center: Optional[float], eps: Optional[float], k: Optional[int],
          zero_orders: Sequence[int], debug: Optional[Debug]) -> Tuple[BumpResult, Optional[int]]:
    center = g.center if center is None else float(center)
    eps = float(pick(eps, "bump", "default_eps"))
    k = int(pick(k, "bump", "k"))
    if not eps > 0:
        raise InvalidParameterError("eps must be positive", {"eps": eps})
    m: Optional[int] = None
    flat = False
    if isinstance(g.ambient, DomainSpec):
        verdict = contact_order(g.ambient, g.point(center))
        if verdict.status is OrderStatus.INFINITE:
            flat = True
        elif verdict.status is OrderStatus.INDETERMINATE:
            raise IndeterminateOrderError("Order of the centre is indeterminate", verdict.to_dict(with_probes=False))
        else:
            m = verdict.order
    windows = g.windows(center)
    if not windows:
        raise InfeasibleBumpError("No admissible window", {"center": center})
    failures = []
    for a in windows:
        g.require_concave(center, a)
        result, failure = _candidate(g, center, a, eps, k, zero_orders, m)
        if result is not None and not flat:
            if debug:
                debug.log(f"Bumped at x1={center:g} with half-width {a:g}, Hausdorff {result.hausdorff:.3g}",
                          category="bump")
            return result, m
        if result is not None:
            # the refusal rests on the contact order, not on the candidate's checks
            failure.update({"reason": "centre has infinite order", "verified": True,
                            "hausdorff": result.hausdorff, "checks": result.checks})
            if debug:
                debug.log(f"Window {a:g} passed every check but the centre has infinite order; refusing it",
                          level="WARNING", category="bump")
        elif debug:
            debug.log(f"Window {a:g} rejected: {failure.get('reason')}", level="WARNING", category="bump")
        failures.append(failure)
    if flat:
        verified = [attempt["half_width"] for attempt in failures if attempt.get("verified")]
        raise FlatPointError("Flat boundary point: no bump keeps a finite order at the centre",
                             {"center": g.point(center).tolist(), "eps": eps, "attempts": failures,
                              "verified_windows": verified})
    raise InfeasibleBumpError("No window produced a valid bump", {"center": center, "attempts": failures})


def bump_domain_2d(g: GraphDomain2D, center: Optional[float] = None, eps: Optional[float] = None,
                   k: Optional[int] = None, debug: Optional[Debug] = None) -> Tuple[GraphDomain2D, float]:
    """
    Push the boundary outward at (center, phi(center)) by at most eps.

    Returns the new graph (its ambient is the BumpedDomain) and the
    one-sided Hausdorff distance max(p - phi). ``bump_result`` gives the
    full record.

    Raises:
        FlatPointError: the centre has infinite order
        NotConvexDomainError: the graph is not concave on the window
        InfeasibleBumpError: no admissible window yields a valid bump
    """
    result = bump_result(g, center, eps, k, debug)
    return result.graph, result.hausdorff


def bump_result(g: GraphDomain2D, center: Optional[float] = None, eps: Optional[float] = None,
                k: Optional[int] = None, debug: Optional[Debug] = None) -> BumpResult:
    result, _ = _bump(g, center, eps, k, (), debug)
    return result


def bump_order_choice(g: GraphDomain2D, center: Optional[float] = None, target_order: int = 2,
                      eps: Optional[float] = None, k: Optional[int] = None,
                      debug: Optional[Debug] = None) -> BumpResult:
    """
    Bump so the new centre point has order ``target_order``, by forcing
    p^(j)(center) = 0 for 2 <= j < target_order.

    Raises:
        InvalidParameterError: target is odd, below 2, or above the centre's order
        VerificationError: the order module disagrees with the target
    """
    if target_order < 2 or target_order % 2:
        raise InvalidParameterError("Target order must be even and >= 2", {"target": target_order})
    center = g.center if center is None else float(center)
    if isinstance(g.ambient, DomainSpec):
        verdict = contact_order(g.ambient, g.point(center))
        if verdict.status is OrderStatus.INFINITE:
            raise FlatPointError("Flat boundary point has no finite order to bump down from",
                                 {"center": g.point(center).tolist()})
        if verdict.is_finite and target_order > verdict.order:
            raise InvalidParameterError("Target order exceeds the order of the centre",
                                        {"target": target_order, "order": verdict.order})
    result, _ = _bump(g, center, eps, k, range(2, target_order), debug)

    coefficients = x_coefficients(result.polynomial)
    terms = {(0, 1): 1.0}
    for i, c in enumerate(coefficients):
        terms[(i, 0)] = terms.get((i, 0), 0.0) - float(c)
    a = result.half_width
    top = float(result.polynomial(center))
    local = DomainSpec(Polynomial(terms, dim=2), ([center - a, top - 2.0 * a], [center + a, top + a]),
                       name=f"{g.ambient.name}:bump-cap")
    verdict = contact_order(local, [center, top])
    if not verdict.is_finite or verdict.order != target_order:
        raise VerificationError("Bumped centre has the wrong order",
                                {"target": target_order, "verdict": verdict.to_dict(with_probes=False)})
    result.order = verdict.order
    return result

"""
Domains as sublevel sets of a defining function.

Omega = {rho < 0} inside a bounding box. This module locates the boundary
(ray marching plus a bracketed root polish), builds normals and tangent
frames, samples the boundary deterministically, multiplies defining
functions by positive factors and solves closest-boundary-point problems.
"""

import hashlib
import itertools
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from ..common.cache import GEOMETRY_CACHE, Cache
from ..common.config import pick
from ..common.partition import ordered_map, partition_by_size
from ..common.seed import halton_points, sphere_directions
from ..fields.base import ScalarField, as_point, as_points
from ..fields.composite import ProductField
from ..fields.config import create_field_from_json, field_to_json
from ..fields.polynomial import Polynomial
from ..utils.debug import Debug
from ..utils.errors import (
    DegenerateGradientError,
    DimensionMismatchError,
    InvalidParameterError,
    NoInteriorPointError,
    NotOnBoundaryError,
    RayMissError,
)
from .shapes import Shape

BRENT_RTOL = 4.0 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """
    A boundary point with its outward unit normal and tangent frame.

    ``tangent_basis`` has shape (N-1, N); rows are orthonormal and
    orthogonal to ``normal``.
    """

    location: np.ndarray
    normal: np.ndarray
    tangent_basis: np.ndarray
    gradient_norm: float

    @property
    def dim(self) -> int:
        return int(self.location.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "location": self.location.tolist(),
            "normal": self.normal.tolist(),
            "tangent_basis": self.tangent_basis.tolist(),
        }


class DomainSpec(Shape):
    """
    Smooth domain {rho < 0} with a bounding box for its closure.

    Args:
        rho: defining function
        bbox: (lo, hi) corners
        smoothness: differentiability class k >= 1 of the boundary
        name: label used in reports and cache keys
    """

    def __init__(self, rho: ScalarField, bbox: Tuple[Sequence[float], Sequence[float]],
                 smoothness: Optional[int] = None, name: str = "domain"):
        lo = np.asarray(bbox[0], dtype=float).reshape(-1)
        hi = np.asarray(bbox[1], dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.shape[0] != rho.dim:
            raise DimensionMismatchError(
                "Bounding box does not match the defining function",
                {"dim": rho.dim, "lo": lo.tolist(), "hi": hi.tolist()},
            )
        if not np.all(lo < hi):
            raise InvalidParameterError("Bounding box is empty", {"lo": lo.tolist(), "hi": hi.tolist()})
        smoothness = rho.smoothness if smoothness is None else int(smoothness)
        if smoothness < 1:
            raise InvalidParameterError("Domains need a C^1 defining function", {"smoothness": smoothness})
        self.rho = rho
        self._bbox = (lo, hi)
        self.smoothness = smoothness
        self.name = name
        self._hash: Optional[str] = None
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        scale = float(np.max(np.abs(rho.values(corners))))
        self.scale = scale if np.isfinite(scale) and scale > 0 else 1.0

    # Shape interface

    @property
    def dim(self) -> int:
        return self.rho.dim

    @property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return self._bbox

    def contains(self, X: np.ndarray) -> np.ndarray:
        return self.rho.values(X) < 0.0

    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.rho.values(X) <= tol

    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        return np.array([bp.location for bp in sample_boundary(self, count, seed)])

    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        return closest_boundary_points(self, X)[0]

    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        return tangent_basis(self, P).normal

    # Tolerances and identity

    @property
    def boundary_tol(self) -> float:
        return float(pick(None, "domain", "boundary_rel_tol")) * self.scale

    @property
    def spec_hash(self) -> str:
        if self._hash is None:
            canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
            self._hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        return self._hash

    @property
    def cache(self) -> Cache:
        return GEOMETRY_CACHE.namespace(self.spec_hash)

    def to_json(self) -> Dict[str, Any]:
        lo, hi = self._bbox
        return {
            "name": self.name,
            "dim": self.dim,
            "smoothness": self.smoothness,
            "bbox": [lo.tolist(), hi.tolist()],
            "rho": field_to_json(self.rho),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "DomainSpec":
        try:
            rho = create_field_from_json(obj["rho"])
            bbox = obj["bbox"]
            dim = int(obj.get("dim", rho.dim))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParameterError(f"Malformed domain JSON: {e}")
        if dim != rho.dim:
            raise DimensionMismatchError("Declared dimension differs from rho", {"dim": dim, "rho": rho.dim})
        return cls(rho, (bbox[0], bbox[1]), obj.get("smoothness"), obj.get("name", "domain"))

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "smoothness": self.smoothness, "spec_hash": self.spec_hash,
                "rho": self.rho.describe()}


def _exit_times(x0: np.ndarray, U: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.where(U > 0, (hi - x0) / U, np.inf)
        lower = np.where(U < 0, (lo - x0) / U, np.inf)
    return np.minimum(upper, lower).min(axis=1)


def _march(d: DomainSpec, x0: np.ndarray, U: np.ndarray, steps: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sample rho along every ray up to the bbox exit.

    Returns (times, values, first) where ``first`` is the index of the
    first non-negative sample per ray, -1 for rays that never leave Omega.
    """
    t_exit = _exit_times(x0, U, *d.bbox)
    times = t_exit[:, None] * np.linspace(0.0, 1.0, steps + 1)[None, :]
    points = x0[None, None, :] + times[:, :, None] * U[:, None, :]
    values = d.rho.values(points.reshape(-1, d.dim)).reshape(len(U), steps + 1)
    outside = values >= 0.0
    outside[:, 0] = False
    first = np.where(outside.any(axis=1), outside.argmax(axis=1), -1)
    return times, values, first


def _polish(d: DomainSpec, x0: np.ndarray, u: np.ndarray, times: np.ndarray, values: np.ndarray, k: int) -> np.ndarray:
    if values[k] == 0.0:
        return x0 + times[k] * u
    a, b = times[k - 1], times[k]
    t = brentq(lambda s: d.rho.eval(x0 + s * u), a, b,
               xtol=BRENT_RTOL * max(1.0, b), rtol=BRENT_RTOL, maxiter=200)
    return x0 + t * u


def _unit(direction: Sequence[float], dim: int) -> np.ndarray:
    u = as_point(direction, dim)
    length = np.linalg.norm(u)
    if length == 0.0:
        raise InvalidParameterError("Direction must be non-zero")
    return u / length


def project_to_boundary(d: DomainSpec, x0: Sequence[float], direction: Sequence[float],
                        steps: Optional[int] = None) -> BoundaryPoint:
    """
    First boundary crossing of the ray x0 + t·dir, t > 0.

    Raises:
        InvalidParameterError: x0 is not interior
        RayMissError: rho stays negative until the ray leaves the bbox
    """
    steps = int(pick(steps, "domain", "march_steps"))
    x0 = as_point(x0, d.dim)
    u = _unit(direction, d.dim)
    if d.rho.eval(x0) >= 0.0:
        raise InvalidParameterError("Ray origin must be interior (rho < 0)", {"x0": x0.tolist()})
    times, values, first = _march(d, x0, u[None, :], steps)
    if first[0] < 0:
        raise RayMissError("Ray leaves the bounding box without crossing the boundary",
                           {"x0": x0.tolist(), "dir": u.tolist()})
    P = _polish(d, x0, u, times[0], values[0], int(first[0]))
    return tangent_basis(d, P, tol=np.inf)


def _frame(normal: np.ndarray) -> np.ndarray:
    N = normal.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([normal, np.eye(N)]))
    tangents = Q[:, 1:N].T.copy()
    # fix each row's sign so the largest component is positive
    for row in tangents:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return tangents


def tangent_basis(d: DomainSpec, P: Sequence[float], tol: Optional[float] = None) -> BoundaryPoint:
    """
    Normal and orthonormal tangent frame at a boundary point.

    Args:
        tol: allowed |rho(P)|; defaults to the domain's boundary tolerance

    Raises:
        NotOnBoundaryError: |rho(P)| exceeds ``tol``
        DegenerateGradientError: grad rho vanishes at P
    """
    P = as_point(P, d.dim)
    tol = d.boundary_tol if tol is None else tol
    value = d.rho.eval(P)
    if abs(value) > tol:
        raise NotOnBoundaryError("Point is not on the boundary", {"point": P.tolist(), "rho": value, "tol": tol})
    g = d.rho.gradient(P)
    length = float(np.linalg.norm(g))
    if length < float(pick(None, "domain", "min_gradient")):
        raise DegenerateGradientError("Defining function has vanishing gradient at the point",
                                      {"point": P.tolist(), "gradient_norm": length})
    normal = g / length
    return BoundaryPoint(location=P, normal=normal, tangent_basis=_frame(normal), gradient_norm=length)


def _anchor_candidates(d: DomainSpec, grid: int, max_dim: int) -> np.ndarray:
    lo, hi = d.bbox
    if d.dim > max_dim:
        return lo + halton_points(grid ** max_dim, d.dim, seed=0) * (hi - lo)
    axes = [lo[i] + (np.arange(grid) + 0.5) * (hi[i] - lo[i]) / grid for i in range(d.dim)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d.dim)


def find_anchor(d: DomainSpec, grid: Optional[int] = None) -> np.ndarray:
    """
    Interior anchor for boundary sampling: the centroid of the interior grid
    cells when it is interior itself, else the interior cell nearest to it.
    """
    grid = int(pick(grid, "domain", "anchor_grid"))
    max_dim = int(pick(None, "domain", "max_anchor_dim"))

    def compute() -> np.ndarray:
        candidates = _anchor_candidates(d, grid, max_dim)
        inside = candidates[d.contains(candidates)]
        if len(inside) == 0:
            raise NoInteriorPointError("No interior point found by the bounding-box scan",
                                       {"domain": d.name, "grid": grid})
        centroid = np.round(inside.mean(axis=0), 12)
        if d.rho.eval(centroid) < 0.0:
            return centroid
        return inside[np.argmin(np.linalg.norm(inside - centroid, axis=1))]

    return d.cache(f"anchor.{grid}", compute).copy()


def _project_rays(d: DomainSpec, anchor: np.ndarray, U: np.ndarray, steps: int) -> List[Optional[BoundaryPoint]]:
    times, values, first = _march(d, anchor, U, steps)
    min_gradient = float(pick(None, "domain", "min_gradient"))

    def polish(i: int) -> Optional[BoundaryPoint]:
        if first[i] < 0:
            return None
        P = _polish(d, anchor, U[i], times[i], values[i], int(first[i]))
        g = d.rho.gradient(P)
        length = float(np.linalg.norm(g))
        if length < min_gradient:
            return None
        normal = g / length
        return BoundaryPoint(location=P, normal=normal, tangent_basis=_frame(normal), gradient_norm=length)

    return ordered_map(polish, range(len(U)))


def sample_boundary(d: DomainSpec, count: int, seed: int = 0, max_rounds: int = 8,
                    debug: Optional[Debug] = None) -> List[BoundaryPoint]:
    """
    ``count`` boundary points hit by rays from the interior anchor.

    Directions come from ``sphere_directions``; points with a degenerate
    gradient are skipped and near-duplicates (within the dedup tolerance)
    dropped, with extra phase-shifted rounds filling the gap.
    """
    if count < 1:
        raise InvalidParameterError("count must be at least 1", {"count": count})
    steps = int(pick(None, "domain", "march_steps"))
    dedup = float(pick(None, "domain", "dedup_tol"))

    def compute() -> List[BoundaryPoint]:
        anchor = find_anchor(d)
        accepted: List[BoundaryPoint] = []
        locations = np.zeros((0, d.dim))
        for round_index in range(max_rounds):
            missing = count - len(accepted)
            if missing <= 0:
                break
            rays = count if round_index == 0 else max(2 * missing, 16)
            U = sphere_directions(rays, d.dim, seed + 7919 * round_index)
            for bp in _project_rays(d, anchor, U, steps):
                if bp is None or len(accepted) >= count:
                    continue
                if len(locations) and np.min(np.linalg.norm(locations - bp.location, axis=1)) <= dedup:
                    continue
                accepted.append(bp)
                locations = np.vstack([locations, bp.location])
        if len(accepted) < count and debug:
            debug.log(f"Only {len(accepted)} of {count} boundary samples found on {d.name}",
                      level="WARNING", category="sampling", force=True)
        return accepted

    return list(d.cache(f"boundary.{count}.{seed}", compute))


def multiply_by_h(d: DomainSpec, h: ScalarField, samples: Optional[int] = None) -> DomainSpec:
    """
    Domain with defining function h·rho; same zero set when h > 0 near the boundary.

    Raises:
        InvalidParameterError: h is not positive at some sampled boundary point
    """
    if h.dim != d.dim:
        raise DimensionMismatchError("h and rho have different dimensions", {"rho": d.dim, "h": h.dim})
    samples = int(pick(samples, "convexity", "boundary_samples"))
    margin = float(pick(None, "domain", "positive_h_margin"))
    boundary = sample_boundary(d, samples, seed=0)
    P = np.array([bp.location for bp in boundary])
    nu = np.array([bp.normal for bp in boundary])
    probes = np.concatenate([P, P + margin * nu, P - margin * nu])
    values = h.values(probes)
    if np.any(values <= 0.0):
        worst = int(np.argmin(values))
        raise InvalidParameterError("h is not positive near the boundary",
                                    {"point": probes[worst].tolist(), "h": float(values[worst])})
    if isinstance(d.rho, Polynomial) and isinstance(h, Polynomial):
        rho = d.rho * h
    else:
        rho = ProductField(d.rho, h)
    rho.name = f"{d.rho.name}*h"
    return DomainSpec(rho, d.bbox, min(d.smoothness, max(h.smoothness, 1)), name=f"{d.name}*h")


# Closest boundary points

def _seed_cloud(d: DomainSpec, count: int) -> Tuple[np.ndarray, cKDTree]:
    def compute():
        cloud = np.array([bp.location for bp in sample_boundary(d, count, seed=0)])
        return cloud, cKDTree(cloud)

    return d.cache(f"seed_cloud.{count}", compute)


def _newton_feet(d: DomainSpec, X: np.ndarray, Y0: np.ndarray, iterations: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Newton on the Lagrange system y - x + mu·grad rho(y) = 0, rho(y) = 0.

    Returns refined feet and a mask of rows that converged to the boundary.
    """
    N = d.dim
    Y = Y0.copy()
    g = d.rho.gradient_many(Y)
    mu = -np.einsum("ij,ij->i", Y - X, g) / np.maximum(np.einsum("ij,ij->i", g, g), 1e-300)
    cap = 0.25 * d.diameter
    eye = np.eye(N)
    for _ in range(iterations):
        r = d.rho.values(Y)
        g = d.rho.gradient_many(Y)
        H = d.rho.hessian_many(Y)
        F = np.concatenate([Y - X + mu[:, None] * g, r[:, None]], axis=1)
        if np.all(np.abs(F) <= 1e-15 * max(1.0, d.scale)):
            break
        J = np.zeros((len(Y), N + 1, N + 1))
        J[:, :N, :N] = eye + mu[:, None, None] * H
        J[:, :N, N] = g
        J[:, N, :N] = g
        try:
            step = np.linalg.solve(J, -F[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.einsum("mij,mj->mi", np.linalg.pinv(J), -F)
        length = np.linalg.norm(step[:, :N], axis=1)
        shrink = np.where(length > cap, cap / np.maximum(length, 1e-300), 1.0)
        step *= shrink[:, None]
        Y = Y + step[:, :N]
        mu = mu + step[:, N]
        bad = ~(np.all(np.isfinite(Y), axis=1) & np.isfinite(mu))
        if np.any(bad):
            Y[bad] = Y0[bad]
            mu[bad] = 0.0
    r = d.rho.values(Y)
    g = d.rho.gradient_many(Y)
    stationarity = np.linalg.norm(Y - X + mu[:, None] * g, axis=1)
    ok = (np.abs(r) <= 10.0 * d.boundary_tol) & (stationarity <= 1e-8 * max(1.0, d.diameter))
    return Y, ok


def closest_boundary_points(d: DomainSpec, X: Any, seeds: Optional[int] = None,
                            neighbours: Optional[int] = None,
                            iterations: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Distances to the boundary and the feet realising them.

    Each point is seeded from its nearest boundary samples; the best
    converged Newton foot wins, falling back to the nearest sample.
    """
    seeds = int(pick(seeds, "domain", "closest_point_seeds"))
    neighbours = int(pick(neighbours, "domain", "closest_point_neighbours"))
    iterations = int(pick(iterations, "domain", "newton_iterations"))
    X = as_points(X, d.dim)
    cloud, tree = _seed_cloud(d, seeds)
    k = min(neighbours, len(cloud))
    distances = np.empty(len(X))
    feet = np.empty_like(X)
    for start, block in zip(range(0, len(X), 8192), partition_by_size(X, 8192)):
        _, idx = tree.query(block, k=k)
        idx = np.asarray(idx).reshape(len(block), k)
        Xr = np.repeat(block, k, axis=0)
        Y0 = cloud[idx.reshape(-1)]
        Y, ok = _newton_feet(d, Xr, Y0, iterations)
        candidates = np.where(ok[:, None], Y, Y0)
        dist = np.linalg.norm(candidates - Xr, axis=1).reshape(len(block), k)
        best = np.argmin(dist, axis=1)
        rows = np.arange(len(block))
        distances[start:start + len(block)] = dist[rows, best]
        feet[start:start + len(block)] = candidates.reshape(len(block), k, d.dim)[rows, best]
    return distances, feet

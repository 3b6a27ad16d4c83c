"""
Shapes: anything with exact membership, a bounding box and a boundary.

DomainSpec (smooth, implicit) and the non-smooth gallery shapes (polytopes
and the rounded square) share this interface so the segment oracle, hulls,
extreme-point probes and gauges work on all of them.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..utils.errors import InvalidParameterError


class Shape(ABC):
    """Bounded region of R^N with exact membership."""

    name: str = "shape"

    @property
    @abstractmethod
    def dim(self) -> int:
        raise NotImplementedError

    @property
    @abstractmethod
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        """(lo, hi) corners of a box containing the closure."""
        raise NotImplementedError

    @abstractmethod
    def contains(self, X: np.ndarray) -> np.ndarray:
        """Open membership, boolean (M,)."""
        raise NotImplementedError

    @abstractmethod
    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Closed membership with absolute slack ``tol``."""
        raise NotImplementedError

    @abstractmethod
    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Deterministic boundary samples, shape (count, N)."""
        raise NotImplementedError

    @abstractmethod
    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        """Euclidean distance of each row to the boundary."""
        raise NotImplementedError

    @abstractmethod
    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        """One unit outward normal at a boundary point."""
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    def describe(self) -> Dict[str, Any]:
        lo, hi = self.bbox
        return {"name": self.name, "dim": self.dim, "bbox": [lo.tolist(), hi.tolist()], "type": type(self).__name__}


def _segment_distances(X: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    length_sq = float(ab @ ab)
    if length_sq == 0.0:
        return np.linalg.norm(X - a, axis=1)
    t = np.clip(((X - a) @ ab) / length_sq, 0.0, 1.0)
    return np.linalg.norm(X - (a + t[:, None] * ab), axis=1)


class Polytope(Shape):
    """
    Convex polygon given by counter-clockwise vertices.

    Faces are n_i·x <= c_i with outward unit normals n_i.
    """

    def __init__(self, vertices: Sequence[Sequence[float]], name: str = "polytope"):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise InvalidParameterError("Polytopes are planar with at least three vertices", {"shape": list(V.shape)})
        signed_area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
        if signed_area <= 0:
            raise InvalidParameterError("Vertices must be ordered counter-clockwise", {"area": float(signed_area)})
        self.vertices = V
        self.name = name
        self.edges: List[Tuple[np.ndarray, np.ndarray]] = [(V[i], V[(i + 1) % len(V)]) for i in range(len(V))]
        normals = []
        for a, b in self.edges:
            e = b - a
            normals.append(np.array([e[1], -e[0]]) / np.linalg.norm(e))
        self.normals = np.array(normals)
        self.offsets = np.einsum("ij,ij->i", self.normals, V)

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def face_values(self, X: np.ndarray) -> np.ndarray:
        """n_i·x - c_i for every face, shape (M, faces)."""
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.normals.T - self.offsets

    def contains(self, X: np.ndarray) -> np.ndarray:
        return np.all(self.face_values(X) < 0.0, axis=1)

    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return np.all(self.face_values(X) <= tol, axis=1)

    @property
    def perimeter(self) -> float:
        return float(sum(np.linalg.norm(b - a) for a, b in self.edges))

    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        lengths = np.array([np.linalg.norm(b - a) for a, b in self.edges])
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
        offset = (seed * 0.6180339887498949) % 1.0
        arc = (np.arange(count) + offset) * cumulative[-1] / count
        points = []
        for s in arc:
            i = min(int(np.searchsorted(cumulative, s, side="right")) - 1, len(lengths) - 1)
            a, b = self.edges[i]
            points.append(a + (s - cumulative[i]) / lengths[i] * (b - a))
        return np.array(points)

    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.min(np.stack([_segment_distances(X, a, b) for a, b in self.edges], axis=1), axis=1)

    def active_faces(self, P: Sequence[float], tol: float = 1e-12) -> np.ndarray:
        values = self.face_values(np.asarray(P, dtype=float)[None, :])[0]
        return np.nonzero(np.abs(values) <= tol)[0]

    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        faces = self.active_faces(P)
        if len(faces) == 0:
            raise InvalidParameterError("Point is not on the polytope boundary", {"point": list(map(float, P))})
        n = self.normals[faces].sum(axis=0)
        return n / np.linalg.norm(n)

    def gauge(self, X: np.ndarray) -> np.ndarray:
        """Minkowski gauge max_i (n_i·x)/c_i; requires the origin inside."""
        if np.any(self.offsets <= 0):
            raise InvalidParameterError("Origin is not interior to the polytope")
        values = np.atleast_2d(np.asarray(X, dtype=float)) @ self.normals.T / self.offsets
        return np.maximum(values.max(axis=1), 0.0)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "vertices": self.vertices.tolist()}


class RoundedSquare(Shape):
    """
    Square |x1|, |x2| < 1 whose corners are replaced by quarter circles of
    radius r centred at (±(1-r), ±(1-r)): the Minkowski sum of the inner
    square of half-side 1-r with a disc of radius r.
    """

    def __init__(self, radius: float = 0.25, name: str = "rounded-square"):
        if not 0 < radius < 1:
            raise InvalidParameterError("Corner radius must lie in (0, 1)", {"radius": radius})
        self.radius = float(radius)
        self.inner = 1.0 - self.radius
        self.name = name

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])

    def inner_signed_distance(self, X: np.ndarray) -> np.ndarray:
        q = np.abs(np.atleast_2d(np.asarray(X, dtype=float))) - self.inner
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside

    def contains(self, X: np.ndarray) -> np.ndarray:
        return self.inner_signed_distance(X) < self.radius

    def contains_closed(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.inner_signed_distance(X) <= self.radius + tol

    def boundary_distance(self, X: np.ndarray) -> np.ndarray:
        return np.abs(self.inner_signed_distance(X) - self.radius)

    def on_arc(self, P: Sequence[float], tol: float = 1e-12) -> bool:
        """True when P lies on one of the four corner arcs (endpoints included)."""
        a = np.abs(np.asarray(P, dtype=float))
        return bool(a[0] >= self.inner - tol and a[1] >= self.inner - tol)

    def _pieces(self) -> List[Tuple[str, Any, float]]:
        h, r = self.inner, self.radius
        edge = 2.0 * h
        arc = 0.5 * np.pi * r
        return [
            ("edge", (np.array([-h, -1.0]), np.array([h, -1.0])), edge),
            ("arc", (np.array([h, -h]), -0.5 * np.pi), arc),
            ("edge", (np.array([1.0, -h]), np.array([1.0, h])), edge),
            ("arc", (np.array([h, h]), 0.0), arc),
            ("edge", (np.array([h, 1.0]), np.array([-h, 1.0])), edge),
            ("arc", (np.array([-h, h]), 0.5 * np.pi), arc),
            ("edge", (np.array([-1.0, h]), np.array([-1.0, -h])), edge),
            ("arc", (np.array([-h, -h]), np.pi), arc),
        ]

    @property
    def perimeter(self) -> float:
        return float(sum(length for _, _, length in self._pieces()))

    def boundary_points(self, count: int, seed: int = 0) -> np.ndarray:
        pieces = self._pieces()
        lengths = np.array([length for _, _, length in pieces])
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
        offset = (seed * 0.6180339887498949) % 1.0
        points = []
        for s in (np.arange(count) + offset) * cumulative[-1] / count:
            i = min(int(np.searchsorted(cumulative, s, side="right")) - 1, len(pieces) - 1)
            kind, data, length = pieces[i]
            u = (s - cumulative[i]) / length
            if kind == "edge":
                a, b = data
                points.append(a + u * (b - a))
            else:
                centre, start = data
                angle = start + 0.5 * np.pi * u
                points.append(centre + self.radius * np.array([np.cos(angle), np.sin(angle)]))
        return np.array(points)

    def normal_at(self, P: Sequence[float]) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        q = np.maximum(np.abs(P) - self.inner, 0.0)
        if not np.any(q > 0):
            raise InvalidParameterError("Point is not on the rounded-square boundary", {"point": P.tolist()})
        n = np.sign(P) * q
        return n / np.linalg.norm(n)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "radius": self.radius}

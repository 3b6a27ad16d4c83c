"""
Scalar field base class.

A ScalarField maps points of R^N to reals and exposes value, gradient and
Hessian access. Subclasses implement the batched ``eval_many``; derivative
access falls back to central differences unless a subclass overrides
``_gradient_many`` / ``_hessian_many`` with exact formulas.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from ..utils.constants import MACHINE_EPS
from ..utils.errors import DimensionMismatchError, NonDifferentiableError
from .types import FieldKind

GRADIENT_STEP = MACHINE_EPS ** (1.0 / 3.0)
HESSIAN_STEP = MACHINE_EPS ** 0.25


def as_point(x: Any, dim: int) -> np.ndarray:
    """Coerce ``x`` to a finite float vector of length ``dim``."""
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.shape[0] != dim:
        raise DimensionMismatchError(
            f"Point has dimension {point.shape[0]}, field expects {dim}",
            {"expected": dim, "got": int(point.shape[0])},
        )
    if not np.all(np.isfinite(point)):
        raise DimensionMismatchError("Point has non-finite coordinates", {"point": point.tolist()})
    return point


def as_points(X: Any, dim: int) -> np.ndarray:
    """Coerce ``X`` to an (M, dim) float array."""
    points = np.asarray(X, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if points.ndim != 2 or points.shape[1] != dim:
        raise DimensionMismatchError(
            f"Point array has shape {points.shape}, field expects (M, {dim})",
            {"expected": dim, "shape": list(points.shape)},
        )
    return points


def fd_gradient_many(field: "ScalarField", X: np.ndarray) -> np.ndarray:
    """Central differences with h = max(1, |x|)·eps^(1/3) per point."""
    M, N = X.shape
    h = GRADIENT_STEP * np.maximum(1.0, np.linalg.norm(X, axis=1))
    eye = np.eye(N)
    # stencil rows: for each point, +h e_j then -h e_j for every j
    offsets = np.concatenate([eye, -eye], axis=0)
    stencil = X[:, None, :] + h[:, None, None] * offsets[None, :, :]
    values = field.eval_many(stencil.reshape(-1, N)).reshape(M, 2 * N)
    return (values[:, :N] - values[:, N:]) / (2.0 * h[:, None])


def fd_hessian_many(field: "ScalarField", X: np.ndarray) -> np.ndarray:
    """
    Second-order central differences
    H_ij = [f(x+h e_i+h e_j) - f(x+h e_i-h e_j) - f(x-h e_i+h e_j) + f(x-h e_i-h e_j)] / 4h^2
    with h = max(1, |x|)·eps^(1/4); the diagonal uses the same formula with i = j.
    """
    M, N = X.shape
    h = HESSIAN_STEP * np.maximum(1.0, np.linalg.norm(X, axis=1))
    eye = np.eye(N)
    pairs = [(i, j) for i in range(N) for j in range(i, N)]
    signs = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    offsets = np.array([si * eye[i] + sj * eye[j] for (i, j) in pairs for (si, sj) in signs])
    stencil = X[:, None, :] + h[:, None, None] * offsets[None, :, :]
    values = field.eval_many(stencil.reshape(-1, N)).reshape(M, len(pairs), 4)
    second = (values[:, :, 0] - values[:, :, 1] - values[:, :, 2] + values[:, :, 3]) / (4.0 * h[:, None] ** 2)
    H = np.zeros((M, N, N))
    for k, (i, j) in enumerate(pairs):
        H[:, i, j] = second[:, k]
        H[:, j, i] = second[:, k]
    return H


class ScalarField(ABC):
    """
    Real-valued function on R^N.

    Args:
        dim: ambient dimension N
        smoothness: declared differentiability class (0 = continuous only)
        name: short label used in reports
    """

    kind: FieldKind = FieldKind.composite

    def __init__(self, dim: int, smoothness: int, name: str = "field"):
        if dim < 1:
            raise DimensionMismatchError("Fields need dimension >= 1", {"dim": dim})
        self._dim = int(dim)
        self.smoothness = int(smoothness)
        self.name = name

    @property
    def dim(self) -> int:
        return self._dim

    @abstractmethod
    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """
        Values at the rows of X, shape (M,).
        """
        raise NotImplementedError

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return fd_gradient_many(self, X)

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        return fd_hessian_many(self, X)

    def _require(self, order: int, X: np.ndarray) -> None:
        if self.smoothness < order:
            raise NonDifferentiableError(
                f"Field '{self.name}' is only C^{self.smoothness}; order-{order} derivatives requested",
                {"field": self.name, "smoothness": self.smoothness, "point": X[0].tolist()},
            )

    def eval(self, x) -> float:
        point = as_point(x, self.dim)
        return float(self.eval_many(point[None, :])[0])

    def __call__(self, x) -> float:
        return self.eval(x)

    def gradient(self, x) -> np.ndarray:
        point = as_point(x, self.dim)[None, :]
        self._require(1, point)
        return self._gradient_many(point)[0]

    def hessian(self, x) -> np.ndarray:
        point = as_point(x, self.dim)[None, :]
        self._require(2, point)
        H = self._hessian_many(point)[0]
        return 0.5 * (H + H.T)

    def values(self, X) -> np.ndarray:
        return np.asarray(self.eval_many(as_points(X, self.dim)), dtype=float)

    def gradient_many(self, X) -> np.ndarray:
        points = as_points(X, self.dim)
        self._require(1, points)
        return self._gradient_many(points)

    def hessian_many(self, X) -> np.ndarray:
        points = as_points(X, self.dim)
        self._require(2, points)
        H = self._hessian_many(points)
        return 0.5 * (H + np.transpose(H, (0, 2, 1)))

    def describe(self) -> Dict[str, Any]:
        """JSON-friendly summary for reports."""
        return {"kind": self.kind.value, "name": self.name, "dim": self.dim, "smoothness": self.smoothness}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, dim={self.dim}, C^{self.smoothness})"

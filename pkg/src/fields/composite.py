"""
Composite scalar fields.

Each composite documents its closed form and declares a differentiability
class. Exact derivatives are given wherever the chain or product rule
makes them available from the components; everything else falls back to
the central differences of the base class.
"""

import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import DimensionMismatchError, InvalidParameterError, SingularTransformError
from .base import ScalarField
from .polynomial import Polynomial
from .types import SMOOTH

VectorFn = Callable[[np.ndarray], np.ndarray]


def _same_dim(fields: Sequence[ScalarField]) -> int:
    dims = {f.dim for f in fields}
    if len(dims) != 1:
        raise DimensionMismatchError("Component fields have different dimensions", {"dims": sorted(dims)})
    return dims.pop()


class ClosedForm(ScalarField):
    """
    Named closed-form field given by vectorized callables.

    Args:
        name: label, e.g. "abs_x1"
        fn: (M, N) -> (M,) values
        dim: ambient dimension
        smoothness: declared class
        grad: optional (M, N) -> (M, N) exact gradient
        hess: optional (M, N) -> (M, N, N) exact Hessian
    """

    def __init__(self, name: str, fn: VectorFn, dim: int, smoothness: int,
                 grad: Optional[VectorFn] = None, hess: Optional[VectorFn] = None,
                 params: Optional[Dict[str, Any]] = None):
        super().__init__(dim, smoothness, name)
        self.fn = fn
        self.grad = grad
        self.hess = hess
        self.params = dict(params or {})

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float)

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(X), dtype=float)
        return super()._gradient_many(X)

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        if self.hess is not None:
            return np.asarray(self.hess(X), dtype=float)
        return super()._hessian_many(X)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "params": self.params}


class SumField(ScalarField):
    """Σ w_i f_i + constant."""

    def __init__(self, fields: Sequence[ScalarField], weights: Optional[Sequence[float]] = None,
                 constant: float = 0.0, name: str = "sum"):
        fields = list(fields)
        dim = _same_dim(fields)
        super().__init__(dim, min(f.smoothness for f in fields), name)
        self.fields = fields
        self.weights = [1.0] * len(fields) if weights is None else [float(w) for w in weights]
        self.constant = float(constant)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        total = np.full(len(X), self.constant)
        for w, f in zip(self.weights, self.fields):
            total = total + w * f.eval_many(X)
        return total

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return sum(w * f._gradient_many(X) for w, f in zip(self.weights, self.fields))

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        return sum(w * f._hessian_many(X) for w, f in zip(self.weights, self.fields))

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "weights": self.weights, "constant": self.constant,
                "terms": [f.describe() for f in self.fields]}


class ProductField(ScalarField):
    """a · b with the product rule for derivatives."""

    def __init__(self, a: ScalarField, b: ScalarField, name: str = "product"):
        dim = _same_dim([a, b])
        super().__init__(dim, min(a.smoothness, b.smoothness), name)
        self.a = a
        self.b = b

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return self.a.eval_many(X) * self.b.eval_many(X)

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        va, vb = self.a.eval_many(X), self.b.eval_many(X)
        return va[:, None] * self.b._gradient_many(X) + vb[:, None] * self.a._gradient_many(X)

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        va, vb = self.a.eval_many(X), self.b.eval_many(X)
        ga, gb = self.a._gradient_many(X), self.b._gradient_many(X)
        cross = ga[:, :, None] * gb[:, None, :]
        return (va[:, None, None] * self.b._hessian_many(X) + vb[:, None, None] * self.a._hessian_many(X)
                + cross + np.transpose(cross, (0, 2, 1)))

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "factors": [self.a.describe(), self.b.describe()]}


class MaxField(ScalarField):
    """
    Pointwise maximum of finitely many fields. Only C^0 in general.
    """

    def __init__(self, fields: Sequence[ScalarField], name: str = "max"):
        fields = list(fields)
        super().__init__(_same_dim(fields), 0, name)
        self.fields = fields

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return np.max(np.stack([f.eval_many(X) for f in self.fields], axis=0), axis=0)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "terms": [f.describe() for f in self.fields]}


class AffinePullback(ScalarField):
    """
    g(x) = f(A^{-1}(x - b)), the defining function of the image domain A·Ω + b.
    """

    def __init__(self, field: ScalarField, A: np.ndarray, b: Sequence[float], name: Optional[str] = None):
        A = np.asarray(A, dtype=float)
        if A.shape != (field.dim, field.dim):
            raise DimensionMismatchError("Transform matrix has the wrong shape", {"shape": list(A.shape)})
        if abs(np.linalg.det(A)) <= 1e-12:
            raise SingularTransformError("Transform matrix is singular", {"det": float(np.linalg.det(A))})
        super().__init__(field.dim, field.smoothness, name or f"{field.name}∘affine")
        self.field = field
        self.A = A
        self.b = np.asarray(b, dtype=float).reshape(-1)
        self.A_inv = np.linalg.inv(A)

    def _pull(self, X: np.ndarray) -> np.ndarray:
        return (X - self.b) @ self.A_inv.T

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return self.field.eval_many(self._pull(X))

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return self.field._gradient_many(self._pull(X)) @ self.A_inv

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        H = self.field._hessian_many(self._pull(X))
        return np.einsum("ki,mkl,lj->mij", self.A_inv, H, self.A_inv)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "A": self.A.tolist(), "b": self.b.tolist(), "base": self.field.describe()}


class ExpConvexified(ScalarField):
    """
    rho_lambda = (exp(lambda·rho) - 1) / lambda.

    Same zero set and sign as rho; its Hessian is
    e^{lambda·rho} (H + lambda ∇rho ∇rho^T).
    """

    def __init__(self, rho: ScalarField, lam: float):
        if lam <= 0:
            raise InvalidParameterError("lambda must be positive", {"lambda": lam})
        super().__init__(rho.dim, rho.smoothness, f"exp_convexified({rho.name})")
        self.rho = rho
        self.lam = float(lam)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return np.expm1(self.lam * self.rho.eval_many(X)) / self.lam

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        scale = np.exp(self.lam * self.rho.eval_many(X))
        return scale[:, None] * self.rho._gradient_many(X)

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        scale = np.exp(self.lam * self.rho.eval_many(X))
        g = self.rho._gradient_many(X)
        H = self.rho._hessian_many(X) + self.lam * g[:, :, None] * g[:, None, :]
        return scale[:, None, None] * H

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "lambda": self.lam, "base": self.rho.describe()}


def power_series_coefficients(q: np.ndarray, alpha: float, order: int) -> np.ndarray:
    """
    Taylor coefficients of (Σ q_k s^k)^alpha up to s^order, q_0 > 0.

    Uses the recurrence
    y_n = 1/(n q_0) Σ_{j=1..n} ((alpha + 1) j - n) q_j y_{n-j}.
    """
    q = np.asarray(q, dtype=float)
    if q[0] <= 0:
        raise InvalidParameterError("Base of a fractional power must be positive", {"q0": float(q[0])})
    padded = np.zeros(order + 1)
    padded[: min(len(q), order + 1)] = q[: order + 1]
    y = np.zeros(order + 1)
    y[0] = padded[0] ** alpha
    for n in range(1, order + 1):
        acc = 0.0
        for j in range(1, n + 1):
            acc += ((alpha + 1.0) * j - n) * padded[j] * y[n - j]
        y[n] = acc / (n * padded[0])
    return y


class PiecewisePower(ScalarField):
    """
    One-variable profile t -> q_i(t)^alpha_i on consecutive pieces [lo_i, hi_i).

    Used for boundary graphs x2 = phi(x1). Derivatives of every order come
    from exact Taylor coefficients of the active piece, so Hermite data for
    bumping is available without differencing.

    Args:
        pieces: list of (lo, hi, univariate Polynomial q, alpha)
        smoothness: declared class of the glued profile
    """

    def __init__(self, pieces: Sequence[Tuple[float, float, Polynomial, float]], smoothness: int = SMOOTH,
                 name: str = "profile"):
        super().__init__(1, smoothness, name)
        if not pieces:
            raise InvalidParameterError("A profile needs at least one piece")
        ordered = sorted(pieces, key=lambda p: p[0])
        for lo, hi, q, _ in ordered:
            if q.dim != 1 or not lo < hi:
                raise InvalidParameterError("Profile pieces must be univariate on non-empty intervals",
                                            {"lo": lo, "hi": hi})
        self.pieces: List[Tuple[float, float, Polynomial, float]] = [
            (float(lo), float(hi), q, float(alpha)) for lo, hi, q, alpha in ordered
        ]

    @property
    def support(self) -> Tuple[float, float]:
        return self.pieces[0][0], self.pieces[-1][1]

    def _piece_index(self, t: float) -> int:
        for i, (lo, hi, _, _) in enumerate(self.pieces):
            if lo <= t < hi:
                return i
        if t == self.pieces[-1][1]:
            return len(self.pieces) - 1
        raise InvalidParameterError(f"t = {t} outside the profile support", {"t": t, "support": list(self.support)})

    def taylor(self, t0: float, order: int) -> np.ndarray:
        """Coefficients c_k with phi(t0 + s) = Σ c_k s^k + O(s^{order+1})."""
        _, _, q, alpha = self.pieces[self._piece_index(float(t0))]
        shifted = q.shifted_coefficients(float(t0))
        if alpha == 1.0:
            out = np.zeros(order + 1)
            out[: min(len(shifted), order + 1)] = shifted[: order + 1]
            return out
        return power_series_coefficients(shifted, alpha, order)

    def derivatives(self, t0: float, order: int) -> np.ndarray:
        """phi(t0), phi'(t0), ..., phi^(order)(t0)."""
        c = self.taylor(t0, order)
        return np.array([math.factorial(k) * c[k] for k in range(order + 1)])

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        t = np.asarray(X, dtype=float).reshape(-1)
        out = np.full(len(t), np.nan)
        for i, (lo, hi, q, alpha) in enumerate(self.pieces):
            upper = (t <= hi) if i == len(self.pieces) - 1 else (t < hi)
            mask = (t >= lo) & upper
            if np.any(mask):
                base = q.eval_many(t[mask][:, None])
                out[mask] = base if alpha == 1.0 else np.power(np.maximum(base, 0.0), alpha)
        return out

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return np.array([[self.derivatives(t, 1)[1]] for t in np.asarray(X).reshape(-1)])

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        return np.array([[[self.derivatives(t, 2)[2]]] for t in np.asarray(X).reshape(-1)])

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "pieces": [
            {"lo": lo, "hi": hi, "q": q.to_json(), "alpha": alpha} for lo, hi, q, alpha in self.pieces
        ]}

"""
Polynomial scalar fields with exact calculus.

Monomials carry non-negative integer exponents and float64 coefficients.
Terms are kept in canonical (lexicographic exponent) order so evaluation,
serialization and hashing are deterministic.
"""

from numbers import Real
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..common.partition import chunked_apply
from ..utils.errors import DimensionMismatchError, InvalidParameterError
from .base import ScalarField
from .types import SMOOTH, FieldKind

Exponent = Tuple[int, ...]


class Polynomial(ScalarField):
    """
    Finite sum of monomials c · x_1^e_1 ··· x_N^e_N.

    Args:
        terms: mapping exponent tuple -> coefficient; duplicates are summed
        dim: ambient dimension (required when ``terms`` is empty)
    """

    kind = FieldKind.polynomial

    def __init__(self, terms: Mapping[Exponent, float], dim: Optional[int] = None, name: str = "polynomial"):
        merged: Dict[Exponent, float] = {}
        for exp, coef in terms.items():
            exp = tuple(int(e) for e in exp)
            if dim is None:
                dim = len(exp)
            if len(exp) != dim:
                raise DimensionMismatchError(
                    f"Monomial {exp} does not match dimension {dim}", {"exp": list(exp), "dim": dim}
                )
            if any(e < 0 for e in exp):
                raise InvalidParameterError(f"Negative exponent in monomial {exp}", {"exp": list(exp)})
            merged[exp] = merged.get(exp, 0.0) + float(coef)
        if dim is None:
            raise DimensionMismatchError("Empty polynomial needs an explicit dimension")
        super().__init__(dim, SMOOTH, name)
        ordered = sorted((exp, coef) for exp, coef in merged.items() if coef != 0.0)
        self._terms: Tuple[Tuple[Exponent, float], ...] = tuple(ordered)
        self.exponents = np.array([exp for exp, _ in ordered], dtype=np.int64).reshape(-1, dim)
        self.coefficients = np.array([coef for _, coef in ordered], dtype=float)
        self._first: Optional[List["Polynomial"]] = None
        self._second: Optional[Dict[Tuple[int, int], "Polynomial"]] = None

    # Constructors

    @classmethod
    def constant(cls, value: float, dim: int) -> "Polynomial":
        return cls({(0,) * dim: value}, dim=dim)

    @classmethod
    def coordinate(cls, index: int, dim: int) -> "Polynomial":
        exp = [0] * dim
        exp[index] = 1
        return cls({tuple(exp): 1.0}, dim=dim)

    @classmethod
    def linear(cls, a: Sequence[float], c: float = 0.0) -> "Polynomial":
        dim = len(a)
        terms = {(0,) * dim: c}
        for i, ai in enumerate(a):
            exp = [0] * dim
            exp[i] = 1
            terms[tuple(exp)] = terms.get(tuple(exp), 0.0) + float(ai)
        return cls(terms, dim=dim)

    @classmethod
    def norm_squared(cls, dim: int, power: int = 1) -> "Polynomial":
        """|x|^(2·power)"""
        base = cls({tuple(2 if j == i else 0 for j in range(dim)): 1.0 for i in range(dim)}, dim=dim)
        return base ** power

    @classmethod
    def univariate(cls, coefficients: Sequence[float]) -> "Polynomial":
        """Σ c_k t^k in one variable."""
        return cls({(k,): c for k, c in enumerate(coefficients)}, dim=1)

    # Evaluation

    def terms(self) -> Tuple[Tuple[Exponent, float], ...]:
        return self._terms

    @property
    def degree(self) -> int:
        if not self._terms:
            return 0
        return int(self.exponents.sum(axis=1).max())

    def _eval_block(self, X: np.ndarray) -> np.ndarray:
        if len(self._terms) == 0:
            return np.zeros(len(X))
        monomials = np.prod(X[:, None, :] ** self.exponents[None, :, :], axis=2)
        return monomials @ self.coefficients

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return chunked_apply(self._eval_block, np.asarray(X, dtype=float))

    def term_magnitudes(self, X: np.ndarray) -> np.ndarray:
        """Σ |c·x^e| per row; the scale of round-off in ``eval_many``."""
        X = np.asarray(X, dtype=float)
        if len(self._terms) == 0:
            return np.zeros(len(X))
        monomials = np.prod(np.abs(X)[:, None, :] ** self.exponents[None, :, :], axis=2)
        return monomials @ np.abs(self.coefficients)

    # Calculus

    def derivative(self, index: int) -> "Polynomial":
        terms: Dict[Exponent, float] = {}
        for exp, coef in self._terms:
            if exp[index] == 0:
                continue
            lowered = list(exp)
            lowered[index] -= 1
            terms[tuple(lowered)] = terms.get(tuple(lowered), 0.0) + coef * exp[index]
        return Polynomial(terms, dim=self.dim)

    def _first_derivatives(self) -> List["Polynomial"]:
        if self._first is None:
            self._first = [self.derivative(j) for j in range(self.dim)]
        return self._first

    def _second_derivatives(self) -> Dict[Tuple[int, int], "Polynomial"]:
        if self._second is None:
            first = self._first_derivatives()
            self._second = {(i, j): first[i].derivative(j) for i in range(self.dim) for j in range(i, self.dim)}
        return self._second

    def _gradient_many(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([d.eval_many(X) for d in self._first_derivatives()])

    def _hessian_many(self, X: np.ndarray) -> np.ndarray:
        M, N = X.shape
        H = np.zeros((M, N, N))
        for (i, j), d in self._second_derivatives().items():
            values = d.eval_many(X)
            H[:, i, j] = values
            H[:, j, i] = values
        return H

    # Algebra

    def _combine(self, other: "Polynomial", sign: float) -> "Polynomial":
        if other.dim != self.dim:
            raise DimensionMismatchError("Polynomial dimensions differ", {"left": self.dim, "right": other.dim})
        terms = dict(self._terms)
        for exp, coef in other._terms:
            terms[exp] = terms.get(exp, 0.0) + sign * coef
        return Polynomial(terms, dim=self.dim)

    def __add__(self, other: Any):
        if isinstance(other, Polynomial):
            return self._combine(other, 1.0)
        if isinstance(other, Real):
            return self._combine(Polynomial.constant(float(other), self.dim), 1.0)
        if isinstance(other, ScalarField):
            from .composite import SumField
            return SumField([self, other])
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other: Any):
        if isinstance(other, Polynomial):
            return self._combine(other, -1.0)
        if isinstance(other, Real):
            return self._combine(Polynomial.constant(float(other), self.dim), -1.0)
        if isinstance(other, ScalarField):
            from .composite import SumField
            return SumField([self, other], weights=[1.0, -1.0])
        return NotImplemented

    def __rsub__(self, other: Any):
        return (-self) + other

    def __neg__(self) -> "Polynomial":
        return Polynomial({exp: -coef for exp, coef in self._terms}, dim=self.dim)

    def __mul__(self, other: Any):
        if isinstance(other, Real):
            return Polynomial({exp: float(other) * coef for exp, coef in self._terms}, dim=self.dim)
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise DimensionMismatchError("Polynomial dimensions differ", {"left": self.dim, "right": other.dim})
            terms: Dict[Exponent, float] = {}
            for ea, ca in self._terms:
                for eb, cb in other._terms:
                    exp = tuple(a + b for a, b in zip(ea, eb))
                    terms[exp] = terms.get(exp, 0.0) + ca * cb
            return Polynomial(terms, dim=self.dim)
        if isinstance(other, ScalarField):
            from .composite import ProductField
            return ProductField(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Polynomial":
        if int(power) != power or power < 0:
            raise InvalidParameterError("Polynomial powers must be non-negative integers", {"power": power})
        result = Polynomial.constant(1.0, self.dim)
        base = self
        n = int(power)
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def compose_affine(self, matrix: np.ndarray, offset: Sequence[float]) -> "Polynomial":
        """
        q(y) = p(M y + c) as a polynomial in y.

        ``matrix`` is (N, K) so the result lives in dimension K.
        """
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        offset = np.asarray(offset, dtype=float).reshape(-1)
        if matrix.shape[0] != self.dim or offset.shape[0] != self.dim:
            raise DimensionMismatchError(
                "Affine map does not match polynomial dimension",
                {"dim": self.dim, "matrix": list(matrix.shape), "offset": int(offset.shape[0])},
            )
        target_dim = matrix.shape[1]
        forms = [Polynomial.linear(matrix[i], offset[i]) for i in range(self.dim)]
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power_of(i: int, e: int) -> Polynomial:
            if (i, e) not in powers:
                powers[(i, e)] = forms[i] ** e
            return powers[(i, e)]

        result = Polynomial({}, dim=target_dim)
        for exp, coef in self._terms:
            term = Polynomial.constant(coef, target_dim)
            for i, e in enumerate(exp):
                if e:
                    term = term * power_of(i, e)
            result = result + term
        return result

    def shifted_coefficients(self, t0: float) -> np.ndarray:
        """
        Coefficients c_k of p(t0 + s) = Σ c_k s^k for a univariate polynomial.
        """
        if self.dim != 1:
            raise DimensionMismatchError("Taylor shift needs a univariate polynomial", {"dim": self.dim})
        shifted = self.compose_affine(np.array([[1.0]]), [t0])
        coefficients = np.zeros(max(self.degree, 0) + 1)
        for (k,), coef in shifted.terms():
            coefficients[k] += coef
        return coefficients

    # Serialization

    def to_json(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "monomials": [{"exp": list(exp), "coef": coef} for exp, coef in self._terms],
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Polynomial":
        try:
            dim = int(obj["dim"])
            monomials: Iterable[Mapping[str, Any]] = obj["monomials"]
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParameterError(f"Malformed polynomial JSON: {e}", {"json": obj})
        terms: Dict[Exponent, float] = {}
        for monomial in monomials:
            exp = tuple(int(e) for e in monomial["exp"])
            terms[exp] = terms.get(exp, 0.0) + float(monomial["coef"])
        return cls(terms, dim=dim)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "name": self.name, **self.to_json()}

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Polynomial) and self.dim == other.dim and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.dim, self._terms))

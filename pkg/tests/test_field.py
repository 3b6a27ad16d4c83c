import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.fields.base import fd_gradient_many, fd_hessian_many
from src.fields.composite import (
    AffinePullback,
    ClosedForm,
    ExpConvexified,
    MaxField,
    PiecewisePower,
    ProductField,
    SumField,
)
from src.fields.config import create_field_from_json, field_to_json
from src.fields.polynomial import Polynomial
from src.utils.errors import DimensionMismatchError, InvalidParameterError, NonDifferentiableError

coords = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def cubic():
    # x1^3 - 2 x1 x2 + x2^2 + 1
    return Polynomial({(3, 0): 1.0, (1, 1): -2.0, (0, 2): 1.0, (0, 0): 1.0})


def test_polynomial_values_and_exact_derivatives():
    p = cubic()
    x = np.array([[1.0, 2.0]])
    assert p.values(x)[0] == pytest.approx(1.0 - 4.0 + 4.0 + 1.0)
    assert np.allclose(p.gradient([1.0, 2.0]), [3.0 - 4.0, -2.0 + 4.0])
    assert np.allclose(p.hessian([1.0, 2.0]), [[6.0, -2.0], [-2.0, 2.0]])


def test_finite_differences_agree_with_exact_derivatives():
    p = cubic()
    X = np.array([[0.3, -0.7], [1.2, 0.4]])
    assert np.allclose(fd_gradient_many(p, X), p.gradient_many(X), atol=1e-8)
    assert np.allclose(fd_hessian_many(p, X), p.hessian_many(X), atol=1e-5)


@given(coords, coords)
def test_algebra_matches_pointwise_arithmetic(x1, x2):
    p, q = cubic(), Polynomial.norm_squared(2)
    X = np.array([[x1, x2]])
    assert (p + q).values(X)[0] == pytest.approx(p.values(X)[0] + q.values(X)[0], abs=1e-9)
    assert (p * q).values(X)[0] == pytest.approx(p.values(X)[0] * q.values(X)[0], rel=1e-9, abs=1e-9)
    assert (q ** 2).values(X)[0] == pytest.approx(q.values(X)[0] ** 2, rel=1e-9, abs=1e-9)
    assert (2.0 - p).values(X)[0] == pytest.approx(2.0 - p.values(X)[0], abs=1e-9)


@given(coords, coords)
def test_compose_affine_matches_substitution(y1, y2):
    p = cubic()
    M = np.array([[1.0, 2.0], [0.0, -1.0]])
    c = np.array([0.5, -0.25])
    composed = p.compose_affine(M, c)
    y = np.array([y1, y2])
    assert composed.values(y[None, :])[0] == pytest.approx(p.values((M @ y + c)[None, :])[0], rel=1e-9, abs=1e-9)


def test_shifted_coefficients():
    q = Polynomial.univariate([1.0, 0.0, -1.0])
    assert np.allclose(q.shifted_coefficients(0.5), [0.75, -1.0, -1.0])


def test_polynomial_json_is_loadable():
    p = cubic()
    assert create_field_from_json(field_to_json(p)) == p


def test_composite_json_is_descriptive_only():
    field = MaxField([Polynomial.linear([1.0, 0.0]), Polynomial.linear([0.0, 1.0])])
    descriptor = field_to_json(field)
    assert descriptor["kind"] == "composite"
    with pytest.raises(InvalidParameterError):
        create_field_from_json(descriptor)


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        Polynomial({(1, 0): 1.0, (1, 0, 0): 1.0})
    with pytest.raises(DimensionMismatchError):
        cubic().values([[1.0, 2.0, 3.0]])
    with pytest.raises(InvalidParameterError):
        Polynomial({(-1, 0): 1.0})


def test_max_field_is_only_continuous():
    field = MaxField([Polynomial.linear([1.0, 0.0]), Polynomial.linear([-1.0, 0.0])], name="abs")
    assert field.values([[-3.0, 1.0]])[0] == 3.0
    with pytest.raises(NonDifferentiableError):
        field.gradient([0.0, 0.0])


def test_sum_and_product_fields():
    a, b = Polynomial.linear([1.0, 0.0]), Polynomial.linear([0.0, 1.0], 1.0)
    total = SumField([a, b], weights=[2.0, -1.0], constant=3.0)
    assert total.values([[1.0, 1.0]])[0] == pytest.approx(2.0 - 2.0 + 3.0)
    product = ProductField(a, ClosedForm("exp", lambda X: np.exp(X[:, 1]), 2, 99))
    assert product.values([[2.0, 0.0]])[0] == pytest.approx(2.0)
    assert np.allclose(product.gradient([2.0, 0.0]), [1.0, 2.0], atol=1e-7)


def test_affine_pullback_moves_the_zero_set():
    rho = Polynomial.norm_squared(2) - 1.0
    moved = AffinePullback(rho, np.diag([2.0, 1.0]), [1.0, 0.0])
    assert moved.values([[3.0, 0.0]])[0] == pytest.approx(0.0)
    assert moved.values([[1.0, 0.0]])[0] == pytest.approx(-1.0)


def test_exp_convexified_keeps_sign_and_adds_gradient_term():
    rho = Polynomial.norm_squared(2) - 1.0
    tilde = ExpConvexified(rho, 3.0)
    X = np.array([[0.2, 0.1], [1.0, 0.0], [1.3, 0.4]])
    assert np.array_equal(np.sign(tilde.values(X)), np.sign(np.round(rho.values(X), 12)))
    H = tilde.hessian([1.0, 0.0])
    assert np.allclose(H, [[2.0 + 3.0 * 4.0, 0.0], [0.0, 2.0]])
    with pytest.raises(InvalidParameterError):
        ExpConvexified(rho, 0.0)


def test_piecewise_power_taylor_of_the_circle():
    circle = PiecewisePower([(-1.0, 1.0, Polynomial.univariate([1.0, 0.0, -1.0]), 0.5)])
    jet = circle.derivatives(0.0, 4)
    assert np.allclose(jet, [1.0, 0.0, -1.0, 0.0, -3.0])
    t = 0.6
    assert circle.values([[t]])[0] == pytest.approx(math.sqrt(1 - t * t))
    assert circle.derivatives(t, 1)[1] == pytest.approx(-t / math.sqrt(1 - t * t))


@settings(max_examples=25)
@given(st.floats(-0.9, 0.9))
def test_piecewise_power_second_derivative_matches_closed_form(t):
    circle = PiecewisePower([(-1.0, 1.0, Polynomial.univariate([1.0, 0.0, -1.0]), 0.5)])
    assert circle.derivatives(t, 2)[2] == pytest.approx(-(1 - t * t) ** -1.5, rel=1e-9)


def test_piecewise_power_rejects_points_outside_support():
    profile = PiecewisePower([(0.0, 1.0, Polynomial.univariate([1.0]), 1.0)])
    with pytest.raises(InvalidParameterError):
        profile.derivatives(2.0, 1)

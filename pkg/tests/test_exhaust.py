import json
import math

import numpy as np
import pytest
from scipy import integrate

from src.common.seed import box_points
from src.core.exhaust import (
    ExhaustionKind,
    GridMollifiedField,
    MollifierProfile,
    composition_check,
    distance_to_boundary,
    exhaustion_grid,
    max_exhaustion,
    mollify,
    neg_log_distance_field,
    strongly_convex_smoothing_sequence,
    subharmonicity_check,
    sublevel_decomposition,
    weak_convexity_test,
)
from src.domains.domain import DomainSpec
from src.domains.gallery import get_domain
from src.fields.composite import ClosedForm
from src.fields.polynomial import Polynomial
from src.utils.errors import (
    CriticalLevelError,
    DimensionMismatchError,
    InvalidParameterError,
    NotConvexDomainError,
    QuadratureError,
    VerificationError,
)


def abs_x1():
    return ClosedForm("abs_x1", lambda X: np.abs(X[:, 0]), 2, 0)


def test_distance_to_boundary(ball2, square):
    assert distance_to_boundary(ball2, [0.5, 0.0]) == pytest.approx(0.5, abs=1e-8)
    assert distance_to_boundary(square, [0.5, 0.25]) == pytest.approx(0.5)
    with pytest.raises(InvalidParameterError):
        distance_to_boundary(ball2, [1.5, 0.0])


def test_max_exhaustion_on_the_disc(ball2):
    E = max_exhaustion(ball2, levels=[0.0, 1.0, 2.0], grid=32)
    assert E.exhaustion_kind is ExhaustionKind.MAX_FORM
    values = E.values(np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]]))
    assert values[0] == pytest.approx(0.0, abs=1e-8)
    assert values[1] == pytest.approx(math.log(2.0), abs=1e-8)
    assert values[2] == math.inf
    assert [record["level"] for record in E.checks] == [0.0, 1.0, 2.0]
    for record in E.checks:
        if record["points"]:
            assert record["min_distance"] >= record["margin"]


def test_max_exhaustion_on_the_square(square):
    E = max_exhaustion(square, levels=[1.0], grid=32)
    assert E.values(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.0)


def test_exhaustions_need_a_convex_domain():
    with pytest.raises(NotConvexDomainError):
        max_exhaustion(get_domain("annulus"), grid=16)


def test_neg_log_distance_and_its_exponential_are_convex(ball2):
    E = neg_log_distance_field(ball2, pairs=200)
    assert E.exhaustion_kind is ExhaustionKind.NEG_LOG_DISTANCE
    assert E.checks[0]["midpoint"]["pass"]
    assert composition_check(ball2, pairs=200).passed


def test_exhaustion_grid_csv(ball2):
    E = max_exhaustion(ball2, verify=False)
    lines = exhaustion_grid(E, grid=5).splitlines()
    assert lines[0] == "x1,x2,value"
    assert len(lines) == 26
    assert lines[1].endswith(",inf")
    x1, x2, value = lines[13].split(",")
    assert (float(x1), float(x2)) == (0.0, 0.0)
    assert float(value) == pytest.approx(0.0, abs=1e-12)


def test_mollifier_reproduces_affine_functions():
    affine = Polynomial.linear([2.0, -1.0], 0.5)
    smoothed = mollify(affine, 0.1)
    assert smoothed.grid == 81
    assert abs(smoothed.mass - 1.0) <= 1e-6
    X = np.array([[0.3, -0.2], [1.0, 1.0]])
    np.testing.assert_allclose(smoothed.values(X), affine.values(X), atol=1e-10)


def test_mollified_quadratic_gains_the_second_moment():
    profile = MollifierProfile(2)
    smoothed = mollify(Polynomial.norm_squared(2), 0.1, profile)
    shift = 0.1 ** 2 * 2 * profile.second_moment()
    X = np.array([[0.0, 0.0], [0.4, -0.3]])
    np.testing.assert_allclose(smoothed.values(X), np.einsum("ij,ij->i", X, X) + shift, atol=1e-8)


def test_mollified_abs_matches_the_one_dimensional_integral():
    def weight(u):
        return math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1.0 else 0.0

    mass, _ = integrate.quad(weight, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    first, _ = integrate.quad(lambda u: abs(u) * weight(u), -1.0, 1.0, points=[0.0], epsabs=1e-14, epsrel=1e-13)
    eps = 0.1
    absolute = ClosedForm("abs", lambda X: np.abs(X[:, 0]), 1, 0)
    smoothed = mollify(absolute, eps, grid=20001, triples=200)
    assert smoothed.eval([0.0]) == pytest.approx(eps * first / mass, abs=1e-8)
    # outside the kernel's reach the function is affine and left alone
    assert smoothed.eval([0.5]) == pytest.approx(0.5, abs=1e-10)


def test_mollify_rejects_a_concave_result():
    with pytest.raises(VerificationError) as excinfo:
        mollify(-1.0 * Polynomial.norm_squared(2), 0.1, triples=200)
    assert excinfo.value.details["check"]["pass"] is False
    assert mollify(-1.0 * Polynomial.norm_squared(2), 0.1, verify=False).eps == 0.1


def test_mollifier_arguments_are_validated():
    with pytest.raises(InvalidParameterError):
        mollify(abs_x1(), 0.0)
    with pytest.raises(InvalidParameterError):
        MollifierProfile(2).nodes(40)
    with pytest.raises(QuadratureError):
        MollifierProfile(2).nodes(3)


def test_smoothing_sequence_of_abs_x1():
    f1 = strongly_convex_smoothing_sequence(abs_x1(), 1)
    f2 = strongly_convex_smoothing_sequence(abs_x1(), 2, verify=False)
    X = box_points(10000, np.full(2, -1.0), np.full(2, 1.0), seed=3)
    first, second, base = f1.values(X), f2.values(X), np.abs(X[:, 0])
    assert np.all(first >= second - 1e-12)
    assert np.all(second >= base - 1e-12)
    with pytest.raises(InvalidParameterError):
        strongly_convex_smoothing_sequence(abs_x1(), 0)


def test_smoothing_sequence_rejects_concave_functions():
    concave = -1.0 * Polynomial.norm_squared(2)
    with pytest.raises(VerificationError):
        strongly_convex_smoothing_sequence(concave, 1, samples=100, hessian_samples=10)


def test_weak_convexity():
    w = [1.0, 0.0]
    square_x1 = weak_convexity_test(Polynomial({(2, 0): 1.0}), w, [[0.0, 0.0], [0.3, 0.2]], 0.1)
    assert square_x1.passed
    np.testing.assert_allclose(square_x1.values, [2.0, 2.0], rtol=1e-4)
    kink = weak_convexity_test(abs_x1(), w, [[0.0, 0.0], [0.05, 0.0]], 0.1)
    assert kink.passed
    assert min(kink.values) > 0
    dome = weak_convexity_test(-1.0 * Polynomial.norm_squared(2), w, [[0.0, 0.0]], 0.1)
    assert not dome.passed
    assert dome.to_dict()["certificate"]["value"] == pytest.approx(-2.0, rel=1e-4)


def test_subharmonic_functions_need_not_be_convex():
    harmonic = Polynomial({(2, 0): 1.0, (0, 2): -1.0})
    result = subharmonicity_check(harmonic, samples=50)
    assert result["subharmonic"]
    assert result["verdict"] == "subharmonic but not convex"
    assert subharmonicity_check(Polynomial.norm_squared(2), samples=50)["verdict"] == "convex"
    assert subharmonicity_check(-1.0 * Polynomial.norm_squared(2), samples=50)["verdict"] == "not subharmonic"


def test_sublevel_decomposition_of_the_disc(ball2):
    E = max_exhaustion(ball2, verify=False)
    decomposition = sublevel_decomposition(E, [0.5, 1.0], boundary_samples=24)
    assert len(decomposition) == 2
    inner, outer = list(decomposition)
    assert inner.contains(np.zeros((1, 2)))[0]
    assert outer.contains(inner.boundary_points(12)).all()
    for record in decomposition.to_dict()["records"]:
        assert record["min_eigenvalue"] > 0
        assert record["min_distance"] >= math.exp(-record["level"]) / 2.0 - 1e-6
    assert 0.0 < decomposition.coverage < 1.0


def test_sublevel_levels_are_validated(ball2):
    E = max_exhaustion(ball2, verify=False)
    with pytest.raises(InvalidParameterError):
        sublevel_decomposition(E, [1.0, 0.5])
    with pytest.raises(CriticalLevelError):
        sublevel_decomposition(E, [-0.5], boundary_samples=8)


def test_sublevel_domains_load_back_from_json(ball2):
    E = max_exhaustion(ball2, verify=False)
    decomposition = sublevel_decomposition(E, [0.5, 1.0], boundary_samples=16)
    X = np.array([[0.0, 0.0], [0.3, -0.4], [0.7, 0.1]])
    for dom in decomposition:
        loaded = DomainSpec.from_json(json.loads(json.dumps(dom.to_json())))
        assert loaded.spec_hash == dom.spec_hash
        np.testing.assert_array_equal(loaded.rho.values(X), dom.rho.values(X))
        np.testing.assert_array_equal(loaded.rho.hessian_many(X), dom.rho.hessian_many(X))
        assert loaded.contains(X).tolist() == dom.contains(X).tolist()


def test_lattice_field_json_is_checked(ball2):
    smoothed = sublevel_decomposition(max_exhaustion(ball2, verify=False), [0.5], boundary_samples=8).smoothed
    obj = smoothed.to_json()
    with pytest.raises(DimensionMismatchError):
        GridMollifiedField.from_json({**obj, "lattice": [3, 3]})
    with pytest.raises(InvalidParameterError):
        GridMollifiedField.from_json({k: v for k, v in obj.items() if k != "eps"})

import json

import numpy as np
import pytest

from src.domains.domain import (
    DomainSpec,
    closest_boundary_points,
    find_anchor,
    multiply_by_h,
    project_to_boundary,
    sample_boundary,
    tangent_basis,
)
from src.domains.gallery import get_domain, get_gallery_item, list_gallery, load_domain_file
from src.domains.shapes import Polytope, RoundedSquare
from src.fields.polynomial import Polynomial
from src.utils.errors import (
    InvalidParameterError,
    NotOnBoundaryError,
    RayMissError,
    UnknownDomainError,
)


def test_sampled_boundary_points_lie_on_the_unit_circle(ball2):
    points = sample_boundary(ball2, 32, seed=0)
    assert len(points) == 32
    for bp in points:
        assert abs(np.linalg.norm(bp.location) - 1.0) < 1e-9
        np.testing.assert_allclose(bp.normal, bp.location, atol=1e-8)
        assert bp.tangent_basis.shape == (1, 2)
        assert abs(bp.tangent_basis[0] @ bp.normal) < 1e-12


def test_sampling_is_deterministic_per_seed(ball2):
    first = np.array([bp.location for bp in sample_boundary(ball2, 16, seed=3)])
    second = np.array([bp.location for bp in sample_boundary(ball2, 16, seed=3)])
    np.testing.assert_array_equal(first, second)


def test_anchor_is_interior(ball2, em2):
    for d in (ball2, em2, get_domain("annulus")):
        assert d.contains(find_anchor(d)[None, :])[0]


def test_tangent_basis_on_and_off_the_boundary(ball2):
    bp = tangent_basis(ball2, [1.0, 0.0])
    np.testing.assert_allclose(bp.normal, [1.0, 0.0])
    np.testing.assert_allclose(np.abs(bp.tangent_basis), [[0.0, 1.0]], atol=1e-12)
    assert bp.gradient_norm == pytest.approx(2.0)
    with pytest.raises(NotOnBoundaryError):
        tangent_basis(ball2, [0.5, 0.0])


def test_tangent_frame_in_three_dimensions():
    bp = tangent_basis(get_domain("ball3"), [0.0, 0.0, 1.0])
    frame = np.vstack([bp.normal, bp.tangent_basis])
    np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-12)


def test_project_to_boundary_follows_the_ray(ball2):
    bp = project_to_boundary(ball2, [0.0, 0.0], [1.0, 1.0])
    np.testing.assert_allclose(bp.location, [np.sqrt(0.5), np.sqrt(0.5)], atol=1e-10)
    bp = project_to_boundary(ball2, [0.5, 0.0], [-1.0, 0.0])
    np.testing.assert_allclose(bp.location, [-1.0, 0.0], atol=1e-10)


def test_project_rejects_exterior_origin_and_missing_rays(ball2):
    with pytest.raises(InvalidParameterError):
        project_to_boundary(ball2, [2.0, 0.0], [1.0, 0.0])
    # x1 - 5 < 0 everywhere in the box: every ray leaves without crossing
    halfplane = DomainSpec(Polynomial.linear([1.0, 0.0], -5.0), ([-1.0, -1.0], [1.0, 1.0]), name="halfplane")
    with pytest.raises(RayMissError):
        project_to_boundary(halfplane, [0.0, 0.0], [1.0, 0.0])


def test_closest_boundary_points_on_the_disc(ball2):
    X = np.array([[0.0, 0.5], [0.3, -0.4], [0.9, 0.0], [-0.2, 0.1]])
    distances, feet = closest_boundary_points(ball2, X)
    np.testing.assert_allclose(distances, 1.0 - np.linalg.norm(X, axis=1), atol=1e-7)
    np.testing.assert_allclose(np.linalg.norm(feet, axis=1), 1.0, atol=1e-8)
    np.testing.assert_allclose(ball2.boundary_distance(X), distances)


def test_multiply_by_positive_h_keeps_the_zero_set(ball2):
    h = Polynomial.norm_squared(2) + Polynomial.constant(1.0, 2)
    scaled = multiply_by_h(ball2, h)
    X = np.array([[0.2, 0.2], [0.9, 0.9], [1.0, 0.0]])
    np.testing.assert_array_equal(scaled.contains(X), ball2.contains(X))
    assert abs(scaled.rho.eval([0.0, 1.0])) < 1e-12
    with pytest.raises(InvalidParameterError):
        multiply_by_h(ball2, Polynomial.linear([1.0, 0.0]))


def test_json_round_trip_preserves_the_hash(ball2, tmp_path):
    path = tmp_path / "disc.json"
    path.write_text(json.dumps(ball2.to_json()))
    loaded = load_domain_file(str(path))
    assert loaded.spec_hash == ball2.spec_hash
    assert get_domain("ellipse").spec_hash != ball2.spec_hash


def test_gallery_names_and_unknown_domains():
    names = list_gallery()
    assert "ball2" in names and "em:<m>" in names and "square" in names
    assert get_domain("em:3").name == "em:3"
    with pytest.raises(UnknownDomainError):
        get_gallery_item("no-such-domain")
    with pytest.raises(InvalidParameterError):
        get_domain("square")
    with pytest.raises(InvalidParameterError):
        get_domain("em:0")


def test_polytope_membership_normals_and_gauge(square):
    X = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.0], [1.5, 0.0]])
    assert square.contains(X).tolist() == [True, True, False, False]
    assert square.contains_closed(X).tolist() == [True, True, True, False]
    np.testing.assert_allclose(square.normal_at([1.0, 0.3]), [1.0, 0.0])
    np.testing.assert_allclose(square.normal_at([1.0, 1.0]), [np.sqrt(0.5), np.sqrt(0.5)])
    np.testing.assert_allclose(square.gauge(np.array([[0.5, 0.0], [1.0, 1.0], [-2.0, 0.5]])), [0.5, 1.0, 2.0])
    with pytest.raises(InvalidParameterError):
        Polytope([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])


def test_rounded_square_boundary():
    shape = RoundedSquare(0.25)
    P = shape.boundary_points(64, seed=1)
    np.testing.assert_allclose(shape.boundary_distance(P), 0.0, atol=1e-12)
    assert shape.on_arc([0.75 + 0.25 * np.sqrt(0.5)] * 2)
    assert not shape.on_arc([1.0, 0.0])
    assert shape.perimeter == pytest.approx(8 * 0.75 + 2 * np.pi * 0.25)
    with pytest.raises(InvalidParameterError):
        RoundedSquare(1.5)

import itertools

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from src.core.hulls import (
    CompactSet,
    FunctionFamily,
    chord_witness,
    f_hull,
    gauge_field,
    interior_samples,
    is_extreme,
    krein_milman_check,
    lattice,
    minkowski_gauge,
    segment_compactness_check,
    support_defining_function,
    support_function,
)
from src.core.order import contact_order
from src.domains.gallery import get_domain, get_gallery_item
from src.fields.polynomial import Polynomial
from src.utils.errors import InvalidParameterError, NoSupportError, NotOnBoundaryError

TRIANGLE = np.array([[-0.5, -0.5], [0.5, -0.5], [0.0, 0.5]])


def _outside_triangle(X):
    """Largest distance by which a point crosses one of the triangle's edges."""
    worst = np.zeros(len(X))
    for i in range(3):
        a, b = TRIANGLE[i], TRIANGLE[(i + 1) % 3]
        e = b - a
        cross = e[0] * (X[:, 1] - a[1]) - e[1] * (X[:, 0] - a[0])
        worst = np.maximum(worst, -cross / np.linalg.norm(e))
    return worst


def test_continuous_hull_is_the_set_itself(ball2):
    K = CompactSet(TRIANGLE, label="tri")
    hull = f_hull(ball2, K, FunctionFamily.continuous(), grid=32)
    assert len(hull) == 3
    np.testing.assert_array_equal(np.unique(TRIANGLE, axis=0), hull.points)
    assert hull.label == "hull(tri)"


def test_linear_hull_fills_the_triangle(ball2):
    K = CompactSet(TRIANGLE)
    hull = f_hull(ball2, K, FunctionFamily.real_linear(), grid=64)
    assert len(hull) > 3
    for P in TRIANGLE:
        assert np.any(np.all(hull.points == P, axis=1))
    assert _outside_triangle(hull.points).max() < 0.05
    assert hull.to_csv().splitlines()[0] == "x1,x2,label"


def test_custom_family_hull(ball2):
    K = CompactSet([[0.5, 0.0]])
    hull = f_hull(ball2, K, FunctionFamily.custom([Polynomial.norm_squared(2)]), grid=41)
    assert np.all(np.linalg.norm(hull.points, axis=1) <= 0.5 + 1e-9)
    assert len(hull) > 1


def test_hull_arguments_are_validated(ball2):
    with pytest.raises(InvalidParameterError):
        FunctionFamily.real_linear(directions=16)
    with pytest.raises(InvalidParameterError):
        f_hull(ball2, CompactSet([[2.0, 0.0]]), FunctionFamily.continuous())
    with pytest.raises(InvalidParameterError):
        CompactSet(np.zeros((0, 2)))


def test_segments_escape_through_the_annulus_hole(ball2):
    annulus = get_domain("annulus")
    crossing = segment_compactness_check(annulus, [([1.0, 1.5], [1.0, -1.5])], samples=64)
    assert crossing["endpoint_min"] > 0.1
    assert crossing["escapes"]
    disc = segment_compactness_check(ball2, [([-0.5, 0.0], [0.5, 0.0])], samples=64)
    assert disc["segment_min"] == pytest.approx(0.5, abs=1e-6)
    assert not disc["escapes"]
    with pytest.raises(InvalidParameterError):
        segment_compactness_check(ball2, [([0.0, 0.0], [2.0, 0.0])])


def test_square_corners_are_the_only_extreme_points(square):
    assert is_extreme(square, [1.0, 1.0]).extreme
    assert is_extreme(square, [-1.0, 1.0]).to_dict()["verdict"] == "Extreme"
    edge = is_extreme(square, [0.5, 1.0])
    assert not edge.extreme
    assert square.contains_closed(np.vstack([edge.a, edge.b])).all()
    np.testing.assert_allclose(0.5 * (edge.a + edge.b), [0.5, 1.0])
    assert edge.to_dict()["verdict"] == "NotExtreme"
    with pytest.raises(NotOnBoundaryError):
        is_extreme(square, [0.0, 0.0])


def test_chord_witness_on_the_top_edge(square):
    witness = chord_witness(square, [0.5, 1.0], [0.0, 1.0], [1.0, 1.0])
    assert witness["valid"]
    assert witness["lambda"] == pytest.approx(0.5)
    assert not chord_witness(square, [0.5, 1.0], [0.0, 0.0], [1.0, 1.0])["valid"]


def test_rounded_square_arcs_are_extreme_and_edges_are_not():
    shape = get_gallery_item("rounded-square")
    arc = 0.75 + 0.25 * np.sqrt(0.5)
    assert is_extreme(shape, [arc, arc]).extreme
    assert not is_extreme(shape, [0.0, 1.0]).extreme


def test_disc_points_are_extreme(ball2):
    angles = np.linspace(0.0, 2.0 * np.pi, 5, endpoint=False)
    for P in np.column_stack([np.cos(angles), np.sin(angles)]):
        assert is_extreme(ball2, P, probe=128).extreme


def test_support_functions(ball2, square, em2):
    disc = support_function(ball2, [1.0, 0.0], interior=2000)
    np.testing.assert_allclose(disc.normal, [1.0, 0.0])
    assert disc.max_interior_value < 0
    assert len(disc.zero_set) >= 1
    np.testing.assert_allclose(disc([[1.0, 0.0], [0.0, 0.0]]), [0.0, -1.0], atol=1e-12)

    edge = support_function(square, [1.0, 0.3], interior=2000)
    assert len(edge.zero_set) > 1
    np.testing.assert_allclose(edge.zero_set[:, 0], 1.0)

    flat = support_function(em2, [1.0, 0.0], interior=2000)
    assert flat.max_interior_value < 0
    assert np.all(np.abs(flat.zero_set[:, 1]) < 0.02)


def test_tangent_lines_of_the_annulus_hole_do_not_support():
    with pytest.raises(NoSupportError):
        support_function(get_domain("annulus"), [1.0, 1.0], interior=500)


def test_support_defining_function_of_the_square(square):
    rho = support_defining_function(square, samples=64)
    values = rho.values(np.array([[0.0, 0.0], [0.5, 0.5], [1.5, 0.0]]))
    np.testing.assert_allclose(values, [-1.0, -0.5, 0.5], atol=1e-12)


def test_gauges(ball2, square):
    assert minkowski_gauge(ball2, [0.5, 0.0]) == pytest.approx(0.5)
    assert minkowski_gauge(get_domain("ellipse"), [1.0, 0.0]) == pytest.approx(0.5)
    assert minkowski_gauge(square, [0.5, 0.25]) == pytest.approx(0.5)
    assert minkowski_gauge(get_gallery_item("rounded-square"), [2.0, 0.0]) == pytest.approx(2.0, abs=1e-9)
    assert minkowski_gauge(ball2, [0.0, 0.0]) == 0.0
    field = gauge_field(ball2)
    np.testing.assert_allclose(field.values(np.array([[0.0, 0.3], [0.6, 0.8]])), [0.3, 1.0], atol=1e-9)
    with pytest.raises(InvalidParameterError):
        minkowski_gauge(get_domain("annulus"), [1.0, 0.0])


def test_extreme_points_recover_the_shape(ball2, square):
    assert krein_milman_check(ball2, samples=64, grid=64)["pass"]
    square_check = krein_milman_check(square, samples=64, grid=64)
    assert square_check["pass"]
    assert square_check["extreme_points"] == 4


@pytest.mark.parametrize("name, grid", [("ellipse", 64), ("rounded-square", 32)])
def test_extreme_points_recover_curved_shapes(name, grid):
    check = krein_milman_check(get_gallery_item(name), samples=64, grid=grid)
    assert check["pass"]
    assert check["covered"] == check["tests"] == 200


def test_interior_samples_are_interior(ball2):
    X = interior_samples(ball2, 100)
    assert len(X) == 100
    assert np.all(np.linalg.norm(X, axis=1) < 1.0)


def _in_some_triangle(K, X, margin):
    """Points of X inside a triangle spanned by three points of K, shrunk by ``margin``."""
    inside = np.zeros(len(X), dtype=bool)
    for a, b, c in itertools.combinations(K, 3):
        crosses = []
        for p, q in ((a, b), (b, c), (c, a)):
            e = q - p
            crosses.append((e[0] * (X[:, 1] - p[1]) - e[1] * (X[:, 0] - p[0])) / np.linalg.norm(e))
        crosses = np.array(crosses)
        inside |= np.all(crosses > margin, axis=0) | np.all(crosses < -margin, axis=0)
    return inside


@pytest.mark.parametrize("seed", range(10))
def test_linear_hull_matches_the_triangle_cover(ball2, seed):
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, 8)
    radii = 0.9 * np.sqrt(rng.uniform(0.0, 1.0, 8))
    K = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    hull = f_hull(ball2, CompactSet(K), FunctionFamily.real_linear(), grid=128)
    nodes = lattice(ball2, 128)
    nodes = nodes[ball2.contains(nodes)]
    kept = {tuple(p) for p in hull.points}
    inner = nodes[_in_some_triangle(K, nodes, 1e-9)]
    assert all(tuple(p) in kept for p in inner)
    cell = 3.0 / 127
    exact = ConvexHull(K)
    excess = (hull.points @ exact.equations[:, :-1].T + exact.equations[:, -1]).max(axis=1)
    assert excess.max() <= cell


def test_gauge_is_midpoint_convex(square):
    rng = np.random.default_rng(6)
    X, Y = rng.uniform(-3.0, 3.0, (10000, 2)), rng.uniform(-3.0, 3.0, (10000, 2))
    p = gauge_field(square)
    gap = p.values(0.5 * (X + Y)) - 0.5 * (p.values(X) + p.values(Y))
    assert gap.max() <= 1e-9


def test_ellipse_gauge_has_a_closed_form():
    ellipse = get_domain("ellipse")
    X = np.random.default_rng(8).uniform([-2.0, -1.0], [2.0, 1.0], size=(100, 2))
    values = np.array([minkowski_gauge(ellipse, x) for x in X])
    np.testing.assert_allclose(values, np.sqrt(X[:, 0] ** 2 / 4.0 + X[:, 1] ** 2), rtol=1e-8)


def test_every_square_corner_is_extreme(square):
    for corner in itertools.product([-1.0, 1.0], repeat=2):
        assert is_extreme(square, corner).extreme


@pytest.mark.parametrize("name, point", [
    ("ball2", [0.0, 1.0]),
    ("ellipse", [2.0, 0.0]),
    ("ellipse", [0.0, -1.0]),
    ("em:2", [1.0, 0.0]),
    ("em:3", [-1.0, 0.0]),
    ("e3d", [1.0, 0.0, 0.0]),
])
def test_points_of_finite_order_are_extreme(name, point):
    d = get_domain(name)
    assert contact_order(d, point).is_finite
    assert is_extreme(d, point).extreme


def test_annulus_segments_approach_the_hole():
    annulus = get_domain("annulus")
    segments = [([-1.0 / j, -0.5], [-1.0 / j, 0.5]) for j in range(1, 129)]
    report = segment_compactness_check(annulus, segments)
    assert report["endpoint_min"] >= 0.1
    assert report["segment_min"] < 0.01
    assert report["escapes"]
    assert report["segments"][-1]["segment_distance"] == pytest.approx(1.0 / 128, abs=1e-3)

import numpy as np
import pytest

from src.core.convexity import (
    ConvexityClass,
    classify_point,
    map_point,
    random_positive_multipliers,
    transform_domain,
)
from src.core.order import (
    OrderStatus,
    contact_order,
    evenness_check,
    farthest_point_patch,
    order_stability_scan,
    order_table,
    squaring_map_example,
)
from src.domains.domain import DomainSpec, multiply_by_h
from src.domains.gallery import get_domain
from src.fields.polynomial import Polynomial
from src.utils.errors import InvalidParameterError, NotConvexDomainError


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_em_family_has_order_2m_on_the_x1_axis(m):
    verdict = contact_order(get_domain(f"em:{m}"), [1.0, 0.0])
    assert verdict.status is OrderStatus.FINITE
    assert verdict.order == 2 * m
    assert verdict.label == str(2 * m)


def test_em_family_is_order_two_on_the_x2_axis(em2):
    assert contact_order(em2, [0.0, 1.0]).order == 2
    assert [v.order for v in order_table(em2, [[1.0, 0.0], [0.0, -1.0]])] == [4, 2]


def test_orders_in_three_dimensions():
    e3d = get_domain("e3d")
    assert contact_order(e3d, [1.0, 0.0, 0.0]).order == 4
    assert contact_order(e3d, [0.0, 1.0, 0.0]).order == 4
    b = 0.5 ** 0.25
    assert contact_order(e3d, [0.0, b, b]).order == 2


def test_flat_cap_has_infinite_order():
    flatcap = get_domain("flatcap")
    verdict = contact_order(flatcap, [0.0, 1.0])
    assert verdict.status is OrderStatus.INFINITE
    assert verdict.order is None
    # C^3 boundary caps the cutoff at 6
    assert verdict.label == "Infinite(6)"
    with pytest.raises(InvalidParameterError):
        evenness_check(verdict)


def test_finite_orders_are_even(em2):
    assert evenness_check(contact_order(em2, [1.0, 0.0]))
    assert evenness_check(contact_order(get_domain("ellipse"), [2.0, 0.0]))


def test_order_arguments_are_validated(ball2):
    with pytest.raises(InvalidParameterError):
        contact_order(ball2, [1.0, 0.0], cutoff=5)
    with pytest.raises(NotConvexDomainError):
        contact_order(get_domain("annulus"), [1.0, 1.0])


def test_verdict_serialization(em2):
    out = contact_order(em2, [1.0, 0.0]).to_dict()
    assert out["status"] == "Finite" and out["label"] == "4"
    assert len(out["directions"]) >= 2
    assert "directions" not in contact_order(em2, [1.0, 0.0]).to_dict(with_probes=False)


def test_order_is_upper_semicontinuous_near_a_flat_point(em2):
    result = order_stability_scan(em2, [1.0, 0.0], radius=0.1, count=12)
    assert result.base_order == 4
    assert result.max_order <= 4
    assert result.passed
    assert all(np.linalg.norm(v.location - [1.0, 0.0]) <= 0.15 for v in result.orders)


def test_stability_scan_needs_a_finite_base_order():
    with pytest.raises(InvalidParameterError):
        order_stability_scan(get_domain("flatcap"), [0.0, 1.0], radius=0.05, count=4)


def test_farthest_point_patch_is_strongly_convex(em2):
    patch = farthest_point_patch(em2, samples=64, neighbours=6)
    assert len(patch.neighbours) == 6
    assert abs(em2.rho.eval(patch.point.location)) < 1e-9


def test_squaring_map_sends_order_four_to_order_two():
    example = squaring_map_example(count=8)
    assert example["source_order"] == 4
    assert example["image_orders"] == [2] * 8
    assert set(example["image_classes"]) == {"StronglyConvex"}
    assert example["max_image_residual"] < 1e-12
    with pytest.raises(InvalidParameterError):
        squaring_map_example(window=1.5)


def test_order_survives_positive_multipliers(em2):
    for h in random_positive_multipliers(2, count=5, seed=4):
        scaled = multiply_by_h(em2, h, samples=32)
        assert contact_order(scaled, [1.0, 0.0]).order == 4
        assert contact_order(scaled, [0.0, 1.0]).order == 2


def test_order_survives_a_rotation(em2):
    angle = 0.4
    R = [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
    rotated = transform_domain(em2, R)
    assert contact_order(rotated, map_point(R, None, [1.0, 0.0])).order == 4
    assert contact_order(rotated, map_point(R, None, [0.0, 1.0])).order == 2


def test_cubic_inflection_has_odd_order():
    cubic = DomainSpec(Polynomial({(0, 1): 1.0, (3, 0): -1.0}), ([-1.0, -1.0], [1.0, 1.0]), name="cubic")
    verdict = contact_order(cubic, [0.0, 0.0])
    assert verdict.status is OrderStatus.ODD
    assert verdict.order == 3
    assert all(p.slope == pytest.approx(3.0, abs=0.05) for p in verdict.direction_orders)
    assert not evenness_check(verdict)
    # the concave side of the inflection
    assert classify_point(cubic, [0.1, 0.001]).convexity_class is ConvexityClass.NOT_CONVEX
    assert classify_point(cubic, [-0.1, -0.001]).convexity_class is ConvexityClass.STRONGLY_CONVEX


@pytest.mark.parametrize("name, point", [("ball2", [1.0, 0.0]), ("e3d", [0.0, 0.5 ** 0.25, 0.5 ** 0.25])])
def test_stability_scan_on_strongly_convex_points(name, point):
    result = order_stability_scan(get_domain(name), point, radius=0.1, count=12)
    assert result.base_order == 2
    assert result.max_order == 2
    assert result.passed
    assert len(result.orders) > 0

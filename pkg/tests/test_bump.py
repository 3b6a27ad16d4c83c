import io
import json
from types import SimpleNamespace

import numpy as np
import pytest

from src.core import bump
from src.core.bump import (
    BumpData,
    BumpedDomain,
    GraphDomain2D,
    bump_domain_2d,
    bump_order_choice,
    bump_polynomial,
    bump_result,
    flatcap_graph,
    x_coefficients,
)
from src.domains.gallery import get_domain
from src.utils.debug import Debug
from src.utils.errors import (
    FlatPointError,
    InfeasibleBumpError,
    InvalidParameterError,
    NotConvexDomainError,
)


def parabola_data(gamma0, a=0.5):
    # phi(x) = 1 - x^2 with its first derivative at -a and a
    phi, slope = 1.0 - a * a, 2.0 * a
    return BumpData(a, [phi, slope], [phi, -slope], gamma0, k=1)


def test_bump_polynomial_over_a_parabola():
    p = bump_polynomial(parabola_data(1.01))
    np.testing.assert_allclose(x_coefficients(p), [1.01, 0.0, -1.08, 0.0, 0.16], atol=1e-12)
    assert p(0.0) == pytest.approx(1.01)
    assert p.deriv(1)(0.5) == pytest.approx(-1.0)


def test_unraised_data_reproduce_the_graph():
    p = bump_polynomial(parabola_data(1.0))
    t = np.linspace(-0.5, 0.5, 11)
    np.testing.assert_allclose(p(t), 1.0 - t ** 2, atol=1e-12)


def test_infeasible_bump_data():
    with pytest.raises(InfeasibleBumpError):
        bump_polynomial(parabola_data(0.7))
    with pytest.raises(InfeasibleBumpError) as excinfo:
        bump_polynomial(parabola_data(2.0))
    assert excinfo.value.details["second_derivative"] > 0
    with pytest.raises(InvalidParameterError):
        BumpData(0.5, [1.0], [1.0], 1.0, k=1)
    with pytest.raises(InvalidParameterError):
        BumpData(0.0, [1.0, 0.0], [1.0, 0.0], 1.0, k=1)


def test_graph_of_the_disc():
    g = GraphDomain2D.from_separable(get_domain("ball2"))
    np.testing.assert_allclose(g.value([0.0, 0.6]), [1.0, 0.8])
    np.testing.assert_allclose(g.jet(0.0, 2), [1.0, 0.0, -1.0], atol=1e-9)
    # a = 0.5 turns the tangent by 60 degrees, beyond the limit
    assert g.windows() == [0.25, 0.125, 0.0625, 0.03125, 0.015625]
    with pytest.raises(InvalidParameterError):
        GraphDomain2D.from_separable(get_domain("distorted-ball"))


@pytest.mark.parametrize("name", ["ball2", "em:2"])
def test_bump_at_a_curved_point(name):
    d = get_domain(name)
    g = GraphDomain2D.from_separable(d)
    result = bump_result(g, 0.0, eps=1e-2)
    assert 0.0 < result.hausdorff < 1e-2
    assert result.checks["oracle"]["verdict"] == "Convex"
    assert result.checks["contains_original"]
    assert result.half_width == 0.25
    assert isinstance(result.domain, BumpedDomain)
    apex = [0.0, 1.0 + 0.5 * 1e-2 - 1e-4]
    assert result.domain.contains(np.array([apex]))[0]
    assert not d.contains(np.array([apex]))[0]


def test_bump_domain_returns_the_new_graph(ball2):
    graph, hausdorff = bump_domain_2d(GraphDomain2D.from_separable(ball2), eps=1e-2)
    assert isinstance(graph.ambient, BumpedDomain)
    assert graph.value(0.0)[0] == pytest.approx(1.0 + hausdorff)


def test_bump_outputs(ball2):
    result = bump_result(GraphDomain2D.from_separable(ball2), eps=1e-2)
    lines = result.polyline_csv(samples=9).splitlines()
    assert lines[0] == "x1,phi,bumped"
    assert len(lines) == 10
    record = json.loads(result.coefficients_json())
    assert record["half_width"] == 0.25
    assert result.to_dict()["coefficients"] == record["coefficients"]


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_flat_cap_cannot_be_bumped(eps):
    with pytest.raises(FlatPointError) as excinfo:
        bump_result(flatcap_graph(), 0.0, eps=eps)
    attempts = excinfo.value.details["attempts"]
    assert attempts
    assert all("reason" in attempt for attempt in attempts)
    assert excinfo.value.details["verified_windows"] == []


def test_nonconvex_graphs_are_refused():
    with pytest.raises(NotConvexDomainError):
        bump_result(GraphDomain2D.from_separable(get_domain("peanut")), 0.0)


@pytest.mark.parametrize("target", [2, 4])
def test_order_choice_at_an_order_four_point(target):
    g = GraphDomain2D.from_separable(get_domain("em-rotated:2"))
    result = bump_order_choice(g, 0.0, target_order=target, eps=1e-2)
    assert result.order == target
    assert result.half_width == 0.5
    assert 0.0 < result.hausdorff < 1e-2


def test_order_choice_arguments():
    g = GraphDomain2D.from_separable(get_domain("em-rotated:2"))
    with pytest.raises(InvalidParameterError):
        bump_order_choice(g, 0.0, target_order=3)
    with pytest.raises(InvalidParameterError):
        bump_order_choice(g, 0.0, target_order=6)
    with pytest.raises(FlatPointError):
        bump_order_choice(flatcap_graph(), 0.0, target_order=2)


def test_flat_centre_refuses_a_verified_window(monkeypatch):
    accepted = SimpleNamespace(hausdorff=1e-3, checks={"concave": True})
    monkeypatch.setattr(bump, "_candidate", lambda g, center, a, *rest: (accepted, {"half_width": a}))
    log = io.StringIO()
    with pytest.raises(FlatPointError) as excinfo:
        bump_result(flatcap_graph(), 0.0, eps=1e-2, debug=Debug(enabled=True, stream=log))
    details = excinfo.value.details
    assert details["verified_windows"] == [attempt["half_width"] for attempt in details["attempts"]]
    assert all(attempt["verified"] and attempt["hausdorff"] == 1e-3 for attempt in details["attempts"])
    assert "passed every check but the centre has infinite order" in log.getvalue()

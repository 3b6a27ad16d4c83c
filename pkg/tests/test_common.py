import io
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.common.cache import Cache
from src.common.config import get_config, load_config, pick, set_config
from src.common.partition import chunked_apply, ordered_map, partition_by_size
from src.common.seed import box_points, halton_points, seed_phase, sphere_directions
from src.utils.constants import EXIT_GEOMETRY, EXIT_USAGE, get_thread_count
from src.utils.debug import Debug, progress
from src.utils.errors import (
    FlatPointError,
    InvalidParameterError,
    NotConvexDomainError,
    UnknownDomainError,
)


def test_pick_prefers_explicit_values():
    assert pick(7, "order", "cutoff") == 7
    assert pick(None, "order", "cutoff") == 12


def test_pick_returns_plain_lists():
    levels = pick(None, "exhaust", "check_levels")
    assert isinstance(levels, list)
    assert levels == [0.0, 1.0, 2.0, 4.0]


def test_inherit_and_overrides(tmp_path):
    child = tmp_path / "child.yaml"
    base = tmp_path / "base.yaml"
    base.write_text("order:\n  cutoff: 12\n  fit_points: 5\n")
    child.write_text("__inherit__: base.yaml\norder:\n  cutoff: 8\n")
    config = load_config(str(child), ["order.fit_points=3"])
    assert config.order.cutoff == 8
    assert config.order.fit_points == 3


def test_set_config_switches_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("order:\n  cutoff: 6\n")
    set_config(load_config(str(path)))
    assert pick(None, "order", "cutoff") == 6
    set_config(None)
    assert get_config().order.cutoff == 12


def test_cache_namespaces_do_not_collide():
    cache = Cache()
    a, b = cache.namespace("a"), cache.namespace("b")
    assert a("k", lambda: 1) == 1
    assert b("k", lambda: 2) == 2
    assert a("k", lambda: 3) == 1
    a.clear()
    assert a("k", lambda: 4) == 4
    assert b.get("k") == 2


@given(st.lists(st.integers(), max_size=50), st.integers(min_value=1, max_value=7))
def test_partition_keeps_order(data, size):
    parts = partition_by_size(data, size)
    assert [x for part in parts for x in part] == data
    assert all(len(part) <= size for part in parts)


@settings(deadline=None, max_examples=20)
@given(st.lists(st.integers(-100, 100), max_size=40), st.integers(min_value=1, max_value=4))
def test_ordered_map_matches_serial(items, threads):
    assert ordered_map(lambda x: x * x, items, threads=threads) == [x * x for x in items]


def test_chunked_apply_concatenates_in_order():
    X = np.arange(20.0).reshape(10, 2)
    assert np.array_equal(chunked_apply(lambda A: A.sum(axis=1), X, size=3), X.sum(axis=1))


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("CONVEXLAB_THREADS", "4")
    assert get_thread_count() == 4
    monkeypatch.setenv("CONVEXLAB_THREADS", "junk")
    assert get_thread_count() == 1
    monkeypatch.delenv("CONVEXLAB_THREADS")
    assert get_thread_count() == 1


def test_sphere_directions_seed_zero_contains_axes():
    U = sphere_directions(8, 2, seed=0)
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)
    for axis in ([1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]):
        assert np.min(np.linalg.norm(U - np.array(axis), axis=1)) < 1e-12


def test_sphere_directions_higher_dimensions_are_unit():
    U = sphere_directions(64, 3, seed=2)
    assert U.shape == (64, 3)
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)


def test_quasi_random_points_are_deterministic():
    assert np.array_equal(halton_points(16, 2, seed=3), halton_points(16, 2, seed=3))
    X = box_points(100, np.array([-1.0, 2.0]), np.array([1.0, 3.0]), seed=0)
    assert np.all(X >= [-1.0, 2.0]) and np.all(X <= [1.0, 3.0])
    assert seed_phase(0) == 0.0


def test_error_families_carry_exit_codes():
    assert InvalidParameterError("x").exit_code == EXIT_USAGE
    assert UnknownDomainError("x").exit_code == EXIT_USAGE
    assert NotConvexDomainError("x").exit_code == EXIT_GEOMETRY
    assert FlatPointError("x").exit_code == EXIT_GEOMETRY
    record = FlatPointError("flat", {"point": [0.0, 1.0]}).to_dict()
    assert record["kind"] == "FlatPoint"
    assert record["details"]["point"] == [0.0, 1.0]
    with pytest.raises(ValueError):
        raise InvalidParameterError("usage errors are ValueErrors")


def test_debug_logs_to_its_stream_with_timer_breakdown():
    stream = io.StringIO()
    debug = Debug(enabled=True, show_timestamps=False, stream=stream)
    debug.start_timer("outer")
    debug.start_timer("inner")
    time.sleep(0.02)
    debug.end_timer("inner", "Inner step")
    debug.end_timer("outer", "Outer step", show_breakdown=True)
    debug.log("oracle disagreement", level="WARNING", category="convexity")
    text = stream.getvalue()
    assert "Outer step" in text
    assert "└─ Inner step" in text
    assert "[WARNING] oracle disagreement" in text
    debug.clear_history()
    assert debug.timer_durations == {}


def test_disabled_debug_is_silent_unless_forced():
    stream = io.StringIO()
    debug = Debug(enabled=False, stream=stream)
    debug.log("hidden")
    assert stream.getvalue() == ""
    debug.log("shown", force=True)
    assert "shown" in stream.getvalue()
    assert list(progress(range(3), "points")) == [0, 1, 2]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sputnik.errors import UsageError
from sputnik.indicators import (ObjectiveBounds, generations_to_threshold, hypervolume_2d,
                                normalize_front, normalized_hypervolume, reference_point)

from conftest import monte_carlo_hv

unit_points = st.lists(st.tuples(st.floats(0, 0.99), st.floats(0, 0.99)), min_size=1, max_size=25)


@pytest.mark.parametrize("front, ref, expected", [
    ([(0, 0)], (1, 1), 1.0),
    ([(1, 2), (2, 1)], (3, 3), 3.0),
    ([(1, 2), (2, 1), (2, 2)], (3, 3), 3.0),
    ([(1, 2), (1, 2), (2, 1)], (3, 3), 3.0),
    ([], (3, 3), 0.0),
])
def test_hypervolume_examples(front, ref, expected):
    assert hypervolume_2d(front, ref) == pytest.approx(expected)


def test_hypervolume_hand_case_against_monte_carlo():
    front = np.array([(1.0, 2.0), (2.0, 1.0)])
    assert abs(monte_carlo_hv(front, np.array([3.0, 3.0]), samples=10**6, seed=1) - 3.0) < 0.01


def test_hypervolume_rejects_point_beyond_reference():
    with pytest.raises(UsageError, match=r"\(4\.0, 1\.0\)"):
        hypervolume_2d([(1, 1), (4, 1)], (3, 3))
    with pytest.raises(UsageError, match="2 objectives"):
        hypervolume_2d([(1, 1, 1)], (3, 3, 3))


@settings(max_examples=40, deadline=None)
@given(unit_points, st.integers(0, 2**31))
def test_hypervolume_matches_monte_carlo(points, seed):
    pts = np.array(points)
    ref = np.array([1.0, 1.0])
    exact = hypervolume_2d(pts, ref)
    assert abs(exact - monte_carlo_hv(pts, ref, samples=200_000, seed=seed)) < 0.01


@settings(max_examples=60, deadline=None)
@given(unit_points, st.tuples(st.floats(0, 0.99), st.floats(0, 0.99)), st.randoms())
def test_hypervolume_monotone_and_order_free(points, extra, rnd):
    ref = (1.0, 1.0)
    base = hypervolume_2d(points, ref)
    assert hypervolume_2d(points + [extra], ref) >= base - 1e-12
    shuffled = list(points)
    rnd.shuffle(shuffled)
    assert hypervolume_2d(shuffled, ref) == pytest.approx(base, abs=1e-12)
    assert 0.0 <= base <= 1.0


def test_normalize_examples():
    b = ObjectiveBounds([1.0, 10.0], [3.0, 30.0])
    np.testing.assert_allclose(normalize_front([(1, 10), (3, 30), (2, 15)], b),
                               [[0, 0], [1, 1], [0.5, 0.25]])
    assert b.clamped == 0
    np.testing.assert_allclose(normalize_front([(0, 40)], b), [[0, 1]])
    assert b.clamped == 2
    assert normalized_hypervolume([(1, 10)], ObjectiveBounds([1, 10], [3, 30])) == pytest.approx(1.21)
    np.testing.assert_array_equal(reference_point(3), [1.1, 1.1, 1.1])


def test_normalize_zero_span():
    b = ObjectiveBounds([2.0, 0.0], [2.0, 4.0])
    np.testing.assert_allclose(normalize_front([(2, 2)], b), [[0, 0.5]])


def test_bounds_widen_only():
    b = ObjectiveBounds.from_points([(1, 5), (2, 3)])
    b.widen([(1.5, 4)])
    np.testing.assert_array_equal(b.lower, [1, 3])
    np.testing.assert_array_equal(b.upper, [2, 5])
    b.widen([(0, 9)])
    np.testing.assert_array_equal(b.lower, [0, 3])
    np.testing.assert_array_equal(b.upper, [2, 9])
    with pytest.raises(UsageError):
        ObjectiveBounds([1, 1], [0, 2])


def test_generations_to_threshold_examples():
    series = [0.5, 0.6, 0.72, 0.75]
    assert generations_to_threshold(series, 0.71) == 2
    assert generations_to_threshold(series, 0.9) is None
    assert generations_to_threshold(series, 0.0) == 0

    class Trace:
        hypervolumes = series
    assert generations_to_threshold(Trace(), 0.6) == 1


@settings(max_examples=40, deadline=None)
@given(unit_points)
def test_dominated_points_do_not_matter(points):
    pts = np.array(points)
    dominated = [p for p in pts if any(np.all(q <= p) and np.any(q < p) for q in pts)]
    kept = [p for p in pts if not any(np.all(q <= p) and np.any(q < p) for q in pts)]
    if dominated:
        assert hypervolume_2d(kept, (1, 1)) == pytest.approx(hypervolume_2d(pts, (1, 1)), abs=1e-12)

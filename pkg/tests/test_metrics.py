import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughdonsker.lift import LiftedPath, constant_unit_path, lift_linear_chords
from roughdonsker.metrics import (
    cc_distance,
    holder_distance,
    holder_distances,
    holder_norm,
    holder_scan_logs,
    homogeneous_norm,
    refined_grid,
)
from roughdonsker.tensor import GroupElement, LieElement, dilate, exp, exp_vector, inverse, random_lie, truncated_mul
from roughdonsker.walks import step2_log_path, walk_from_increments


def test_norm_examples():
    assert homogeneous_norm(GroupElement.unit(2, 3)) == 0.0
    v = np.array([3.0, 4.0])
    assert homogeneous_norm(exp_vector(v, 3)) == pytest.approx(5.0, abs=1e-12)
    c = -0.6
    g = exp(LieElement.bracket(2, 2, 0, 1, c))
    assert homogeneous_norm(g) == pytest.approx(math.sqrt(abs(c) * math.sqrt(2)))


def test_distance_examples():
    rng = np.random.default_rng(0)
    g = exp(random_lie(rng, 2, 3))
    assert cc_distance(g, g) == pytest.approx(0.0, abs=1e-12)
    v = np.array([1.0, -2.0])
    assert cc_distance(GroupElement.unit(2, 2), exp_vector(v, 2)) == pytest.approx(math.sqrt(5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-4, 4))
def test_homogeneity_symmetry_left_invariance(seed, lam):
    rng = np.random.default_rng(seed)
    g, h, k = (exp(random_lie(rng, 2, 3, 3.0)) for _ in range(3))
    assert homogeneous_norm(dilate(lam, g)) == pytest.approx(abs(lam) * homogeneous_norm(g), rel=1e-9, abs=1e-12)
    assert homogeneous_norm(inverse(g)) == pytest.approx(homogeneous_norm(g), abs=1e-10)
    assert cc_distance(truncated_mul(k, g), truncated_mul(k, h)) == pytest.approx(cc_distance(g, h), abs=1e-10)


def test_quasi_triangle_constant_is_finite():
    # the sum-form norm is only quasi-subadditive; record the worst ratio seen
    rng = np.random.default_rng(1)
    ratios = []
    for _ in range(300):
        g, h = exp(random_lie(rng, 2, 2, 2.0)), exp(random_lie(rng, 2, 2, 2.0))
        ratios.append(homogeneous_norm(truncated_mul(g, h)) / (homogeneous_norm(g) + homogeneous_norm(h)))
    assert 0 < max(ratios) < 2.0


def test_holder_examples():
    v = np.array([3.0, 4.0])
    path = lift_linear_chords(np.stack([np.zeros(2), v]), 2)
    ev = holder_norm(path, 0.5)
    assert ev.value == pytest.approx(5.0) and ev.pair == (0.0, 1.0)
    assert holder_norm(constant_unit_path(2, 2), 0.4).value == 0.0
    assert holder_distance(path, path, 0.3).value == 0.0
    with pytest.raises(ValueError):
        holder_norm(path, 1.0)
    with pytest.raises(ValueError):
        holder_norm(path, 0.0)


def test_linear_path_depth_three():
    path = lift_linear_chords(np.array([[0.0, 0.0], [3.0, 4.0]]), 3)
    assert holder_norm(path, 0.5).value == pytest.approx(5.0, abs=1e-9)


def test_pure_area_path():
    c = 0.8
    pts = GroupElement(2, 2, [np.ones((2, 1)), np.zeros((2, 2)),
                              np.stack([np.zeros(4), exp(LieElement.bracket(2, 2, 0, 1, c)).levels[2]])])
    path = LiftedPath([0.0, 1.0], pts, "log-linear")
    assert holder_norm(path, 0.5).value == pytest.approx(math.sqrt(c * math.sqrt(2)), rel=1e-12)


def _brute_holder(path, alpha):
    best = 0.0
    for i, j in itertools.combinations(range(len(path.times)), 2):
        inc = truncated_mul(inverse(path.points[i]), path.points[j])
        best = max(best, homogeneous_norm(inc) / (path.times[j] - path.times[i]) ** alpha)
    return best


@pytest.mark.parametrize("signs", list(itertools.product([-1.0, 1.0], repeat=4)))
def test_two_step_rademacher_walk_by_enumeration(signs):
    inc = np.array(signs).reshape(2, 2)
    path = walk_from_increments(inc, 2)
    assert holder_norm(path, 0.5, refinement=0).value == pytest.approx(_brute_holder(path, 0.5), rel=1e-12)


def test_scan_kernels_agree_with_brute_force():
    rng = np.random.default_rng(7)
    inc = rng.normal(size=(20, 2))
    path = walk_from_increments(inc, 2)
    X, A = step2_log_path(inc)
    n = len(inc)
    alphas = [0.3, 0.45, 0.7]
    vals, _ = holder_scan_logs(path.times, X / math.sqrt(n), A / n, alphas)
    for a, v in zip(alphas, vals):
        assert v == pytest.approx(_brute_holder(path, a), rel=1e-12)
    # general two-path kernel on a non-uniform grid
    times = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 19)]))
    p2 = LiftedPath(times, path.points, "linear-lift")
    vals2, _ = holder_scan_logs(times, X / math.sqrt(n), A / n, alphas)
    for a, v in zip(alphas, vals2):
        assert v == pytest.approx(_brute_holder(p2, a), rel=1e-12)


def test_refinement_is_monotone():
    rng = np.random.default_rng(2)
    x = lift_linear_chords(rng.normal(size=(6, 2)), 2)
    y = lift_linear_chords(rng.normal(size=(6, 2)), 2)
    vals = [holder_distance(x, y, 0.4, refinement=r).value for r in range(4)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert len(refined_grid(np.linspace(0, 1, 4), 2)) == 13


def test_holder_norm_monotone_in_alpha():
    # on [0, 1] every pair has t - s <= 1, so the ratio can only grow with alpha
    rng = np.random.default_rng(3)
    path = walk_from_increments(rng.choice([-1.0, 1.0], size=(64, 2)) * 0.05, 2)
    evs = holder_distances(path, constant_unit_path(2, 2, path.times[[0, -1]]), [0.2, 0.3, 0.4, 0.6], refinement=0)
    vals = [e.value for e in evs]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_depth_three_general_scan_matches_brute_force():
    rng = np.random.default_rng(4)
    path = walk_from_increments(rng.normal(size=(8, 2)), 3)
    assert holder_norm(path, 0.4, refinement=0).value == pytest.approx(_brute_holder(path, 0.4), rel=1e-10)

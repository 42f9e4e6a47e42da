import math

import numpy as np
import pytest

from roughdonsker.lift import LINEAR_LIFT, LOG_LINEAR, dumps, signature
from roughdonsker.tensor import GroupElement, exp_vector, log, truncated_mul
from roughdonsker.walks import (
    KINDS,
    IncrementDistribution,
    WalkSpec,
    area_sampler,
    endpoint_products,
    exponential_sampler,
    master_seed_split,
    replica_increments,
    sample_group_walk,
    sample_walk,
    step2_endpoint,
    step2_log_path,
    walk_from_increments,
)


def test_one_step_walk_is_exp_v():
    v = np.array([[0.3, -1.1]])
    path = walk_from_increments(v, 2)
    assert signature(path).allclose(exp_vector(v[0], 2), atol=1e-15)


def test_rademacher_level_one_endpoint():
    n = 50
    path = sample_walk(WalkSpec(n, IncrementDistribution("rademacher", 1), seed=0), master_seed_split(0, 0))
    x = signature(path).levels[1][0] * math.sqrt(n)
    assert x == pytest.approx(round(x)) and (round(x) - n) % 2 == 0


def test_hand_product_of_recorded_increments():
    rng = master_seed_split(11, 0)
    xi = IncrementDistribution("rademacher", 2).sample(rng, 4)
    path = walk_from_increments(xi, 2)
    prod = GroupElement.unit(2, 2)
    for v in xi:
        prod = truncated_mul(prod, exp_vector(v, 2))
    assert path.points[-1].levels[1] == pytest.approx(prod.levels[1] / 2)
    np.testing.assert_allclose(path.points[-1].levels[2], prod.levels[2] / 4, atol=1e-15)


@pytest.mark.parametrize("kind", [k for k in KINDS if k != "degenerate"])
def test_normalised_moments(kind):
    law = IncrementDistribution(kind, 2, nu=6.0)
    x = law.sample(master_seed_split(3, 0), 40000)
    se = x.std(axis=0) / math.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0)) <= 3 * se)
    cov = np.cov(x.T)
    # SE of a sample variance is about sqrt((m4 - 1) / n); m4 <= 9 for these laws
    np.testing.assert_allclose(cov, np.eye(2), atol=3 * math.sqrt(8 / len(x)) + 0.01)


def test_student_t_refused_for_small_nu():
    with pytest.raises(ValueError):
        IncrementDistribution("student-t", 1, nu=2.0)
    assert not IncrementDistribution("student-t", 1, nu=5.0).has_moment(8)
    with pytest.raises(ValueError):
        IncrementDistribution("cauchy", 1)


def test_exact_support():
    atoms = IncrementDistribution("rademacher", 2).exact_support()
    assert len(atoms) == 4 and sum(p for p, _ in atoms) == 1
    two = IncrementDistribution("two-point-asymmetric", 1, prob=0.2).exact_support()
    assert sum(p * x[0] for p, x in two) == 0
    assert sum(p * x[0] ** 2 for p, x in two) == 1
    with pytest.raises(ValueError):
        IncrementDistribution("gaussian").exact_support()


def test_seed_streams():
    a = master_seed_split(5, 3).random(4)
    b = master_seed_split(5, 3).random(4)
    np.testing.assert_array_equal(a, b)
    firsts = {master_seed_split(5, r).integers(0, 2**63) for r in range(10000)}
    assert len(firsts) == 10000
    assert master_seed_split(5, 3, (1,)).random() != master_seed_split(5, 3).random()
    with pytest.raises(ValueError):
        master_seed_split(-1, 0)


def test_walks_are_byte_identical_for_same_seed():
    spec = WalkSpec(20, IncrementDistribution("gaussian", 2), depth=3, seed=9)
    a = sample_walk(spec, master_seed_split(spec.seed, 0))
    b = sample_walk(spec, master_seed_split(spec.seed, 0))
    assert dumps(a) == dumps(b)


def test_group_walk_samplers():
    law = IncrementDistribution("rademacher", 2)
    unit = sample_group_walk(6, lambda rng, n: GroupElement.unit(2, 2, (n,)), master_seed_split(0, 0))
    assert unit.points.max_abs_diff(GroupElement.unit(2, 2, (7,))) == 0
    g = sample_group_walk(16, exponential_sampler(law, 2), master_seed_split(1, 0))
    w = sample_walk(WalkSpec(16, law), master_seed_split(1, 0))
    assert g.interpolation == LINEAR_LIFT
    assert g.points.max_abs_diff(w.points) <= 1e-15


def test_area_sampler_adds_bracket_signs():
    law = IncrementDistribution("rademacher", 2)
    n = 12
    rng = master_seed_split(2, 0)
    xi = area_sampler(law, 2)(rng, n)
    rng = master_seed_split(2, 0)
    path = sample_group_walk(n, area_sampler(law, 2), rng)
    assert path.interpolation == LOG_LINEAR
    v = xi.levels[1]
    eta = log(xi).bracket_coordinates()[:, 0]
    _, A = step2_log_path(v)
    area = A[-1, 0, 1]
    got = log(path.points[-1]).bracket_coordinates()[0]
    assert got == pytest.approx((area + eta.sum()) / n, abs=1e-13)


def test_step2_log_path_matches_tensor_route():
    inc = replica_increments(IncrementDistribution("gaussian", 3), 30, 4, range(3))
    X, A = step2_log_path(inc)
    prods = endpoint_products(inc, 2)
    lg = log(prods)
    np.testing.assert_allclose(X[:, -1], lg.levels[1], atol=1e-12)
    np.testing.assert_allclose(A[:, -1], lg.level(2), atol=1e-12)
    x, a = step2_endpoint(inc)
    np.testing.assert_allclose(a, A[:, -1], atol=1e-12)


def test_brownian_scaling_of_second_moments():
    # E|pi_1 x_{0,t}|^2 = t d for the rescaled walk; dilating by lam maps t to lam^2 t
    law = IncrementDistribution("rademacher", 2)
    n, R, t, lam = 256, 4000, 0.25, 2.0
    inc = replica_increments(law, n, 8, range(R))
    X = np.cumsum(inc, axis=1) / math.sqrt(n)
    a = lam**2 * np.sum(X[:, int(t * n) - 1] ** 2, axis=1)
    b = np.sum(X[:, int(lam**2 * t * n) - 1] ** 2, axis=1)
    se = math.sqrt(a.var() / R + b.var() / R)
    assert abs(a.mean() - b.mean()) <= 3 * se
    assert abs(X[:, -1].mean()) <= 3 * X[:, -1].std() / math.sqrt(R)

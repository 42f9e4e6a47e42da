from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughdonsker.tensor import (
    DimensionError,
    DomainError,
    GroupElement,
    LieElement,
    TensorSeries,
    dilate,
    exp,
    exp_vector,
    inverse,
    log,
    project,
    random_lie,
    stack,
    truncated_mul,
)


def e(i, d=2, depth=2):
    return exp_vector(np.eye(d)[i], depth)


def test_product_of_basis_exponentials():
    g = truncated_mul(e(0), e(1))
    np.testing.assert_array_equal(g.levels[1], [1.0, 1.0])
    np.testing.assert_array_equal(g.level(2), [[0.5, 1.0], [0.0, 0.5]])


def test_unit_is_neutral_and_exp_minus_v_inverts():
    rng = np.random.default_rng(0)
    g = exp(random_lie(rng, 3, 3, scale=2.0))
    unit = GroupElement.unit(3, 3)
    assert truncated_mul(g, unit).max_abs_diff(g) == 0
    v = rng.normal(size=3)
    prod = truncated_mul(exp_vector(v, 3), exp_vector(-v, 3))
    assert prod.allclose(unit, atol=1e-14)


def test_mismatched_operands():
    with pytest.raises(DimensionError):
        truncated_mul(GroupElement.unit(2, 2), GroupElement.unit(3, 2))
    with pytest.raises(DimensionError):
        truncated_mul(GroupElement.unit(2, 2), GroupElement.unit(2, 3))


def test_exp_examples():
    g = exp(LieElement.from_vector([1.0, 0.0], 2))
    np.testing.assert_array_equal(g.levels[1], [1.0, 0.0])
    np.testing.assert_array_equal(g.level(2), [[0.5, 0.0], [0.0, 0.0]])
    assert exp(TensorSeries.zeros(2, 3).astype(LieElement)).max_abs_diff(GroupElement.unit(2, 3)) == 0
    c = 0.7
    g = exp(LieElement.bracket(2, 2, 0, 1, c))
    np.testing.assert_array_equal(g.levels[1], [0.0, 0.0])
    np.testing.assert_allclose(g.level(2), [[0.0, c], [-c, 0.0]])


def test_log_examples():
    assert log(GroupElement.unit(2, 3)).max_abs_diff(TensorSeries.zeros(2, 3)) == 0
    a = log(truncated_mul(e(0), e(1)))
    np.testing.assert_allclose(a.levels[1], [1.0, 1.0])
    np.testing.assert_allclose(a.level(2), [[0.0, 0.5], [-0.5, 0.0]])
    assert a.bracket_coordinates()[0] == pytest.approx(0.5)


def test_log_rejects_bad_scalar():
    g = GroupElement.unit(2, 2)
    bad = TensorSeries(2, 2, [np.array([2.0])] + list(g.levels[1:]))
    with pytest.raises(DomainError):
        log(bad)


def test_inverse_examples():
    unit = GroupElement.unit(2, 2)
    assert inverse(unit).max_abs_diff(unit) == 0
    v = np.array([0.3, -1.2])
    assert inverse(exp_vector(v, 2)).allclose(exp_vector(-v, 2), atol=1e-15)


def test_dilate_examples():
    rng = np.random.default_rng(1)
    g = exp(random_lie(rng, 2, 3))
    assert dilate(1.0, g).max_abs_diff(g) == 0
    v = np.array([1.5, -0.5])
    lam = 0.3
    assert dilate(lam, exp_vector(v, 2)).allclose(exp_vector(lam * v, 2), atol=1e-15)
    # k-fold product of exp(+-e1), dilated by n^{-1/2}
    n = 9
    signs = [1, -1, 1, 1]
    prod = GroupElement.unit(1, 2)
    for s in signs:
        prod = truncated_mul(prod, exp_vector([float(s)], 2))
    scaled = dilate(n**-0.5, prod)
    assert scaled.levels[1][0] == pytest.approx(prod.levels[1][0] / 3)
    assert scaled.levels[2][0] == pytest.approx(prod.levels[2][0] / 9)


def test_project_examples():
    v = np.array([0.4, -2.0])
    np.testing.assert_allclose(project(1, exp_vector(v, 2)), v)
    np.testing.assert_allclose(project(2, exp_vector(v, 2)), 0.0, atol=1e-15)
    blk = project(2, truncated_mul(e(0), e(1)))
    assert blk[0, 1] == pytest.approx(0.5) and blk[1, 0] == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        project(0, exp_vector(v, 2))
    with pytest.raises(ValueError):
        project(3, exp_vector(v, 2))


def test_exact_arithmetic_with_fractions():
    levels = [np.array([Fraction(0)], dtype=object), np.array([Fraction(1), Fraction(0)], dtype=object),
              np.array([Fraction(0)] * 4, dtype=object)]
    g = exp(LieElement(2, 2, levels))
    assert g.level(2)[0, 0] == Fraction(1, 2)
    assert log(g).level(2)[0, 0] == 0


def test_batches_broadcast():
    rng = np.random.default_rng(2)
    a = exp(random_lie(rng, 2, 3, batch=(4,)))
    b = exp(random_lie(rng, 2, 3))
    prod = truncated_mul(a, b)
    assert prod.batch_shape == (4,)
    for i in range(4):
        assert prod[i].allclose(truncated_mul(a[i], b), atol=1e-14)
    assert stack([a[0], a[1]]).batch_shape == (2,)


shapes = st.tuples(st.integers(1, 3), st.integers(1, 4))


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_associativity(shape, seed):
    d, N = shape
    rng = np.random.default_rng(seed)
    a, b, c = (exp(random_lie(rng, d, N, scale=3.0)) for _ in range(3))
    left = truncated_mul(truncated_mul(a, b), c)
    right = truncated_mul(a, truncated_mul(b, c))
    scale = max(1.0, float(np.max(np.abs(left.coefficients()))))
    assert left.max_abs_diff(right) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_exp_log_round_trip(shape, seed):
    d, N = shape
    rng = np.random.default_rng(seed)
    a = random_lie(rng, d, N, scale=10.0)
    g = exp(a)
    # tolerance relative to the coefficient magnitude (level-4 entries reach ~1e3)
    scale = max(1.0, float(np.max(np.abs(g.coefficients()))))
    assert log(g).max_abs_diff(a) <= 1e-12 * scale
    assert exp(log(g)).max_abs_diff(g) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(shapes, st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_dilation_is_a_morphism(shape, lam, seed):
    d, N = shape
    rng = np.random.default_rng(seed)
    g, h = exp(random_lie(rng, d, N, 2.0)), exp(random_lie(rng, d, N, 2.0))
    left = dilate(lam, truncated_mul(g, h))
    right = truncated_mul(dilate(lam, g), dilate(lam, h))
    scale = max(1.0, float(np.max(np.abs(left.coefficients()))))
    assert left.max_abs_diff(right) <= 1e-12 * scale
    # scaling consistency of the log chart
    lg, ld = log(g), log(dilate(lam, g))
    for m in range(1, N + 1):
        np.testing.assert_allclose(ld.levels[m], lam**m * lg.levels[m], atol=1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_level_one_is_additive_and_inverse_is_exact(shape, seed):
    d, N = shape
    rng = np.random.default_rng(seed)
    g, h = exp(random_lie(rng, d, N, 10.0)), exp(random_lie(rng, d, N, 10.0))
    np.testing.assert_allclose(project(1, truncated_mul(g, h)), project(1, g) + project(1, h), atol=1e-12)
    unit = GroupElement.unit(d, N)
    prod = truncated_mul(g, inverse(g))
    scale = max(1.0, float(np.max(np.abs(g.coefficients()))))
    assert prod.max_abs_diff(unit) <= 1e-12 * scale ** 2


def test_group_likeness_of_products():
    # shuffle relation at level 2: sym part of level 2 equals (level 1)^{(x)2}/2
    rng = np.random.default_rng(5)
    g = truncated_mul(exp(random_lie(rng, 3, 3)), exp(random_lie(rng, 3, 3)))
    x1, x2 = g.levels[1], g.level(2)
    np.testing.assert_allclose(x2 + x2.T, np.outer(x1, x1), atol=1e-13)

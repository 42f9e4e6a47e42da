import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughdonsker.graded import (
    FiniteLawMoments,
    GaussianMoments,
    GradedPolynomial,
    MomentOracle,
    TableMoments,
    UnresolvedMomentError,
    _layout,
    brute_force_moment,
    cbh_compose,
    degree,
    level_polynomial,
    norm_polynomial,
    product_laws,
    T_apply,
    tightness_exponents,
    walk_moment,
    walk_moment_series,
)
from roughdonsker.tensor import exp, log, random_lie, truncated_mul
from roughdonsker.walks import IncrementDistribution, replica_increments, step2_endpoint


def var(d, N, m, word, group=0, groups=1):
    return GradedPolynomial.variable(d, N, m, word, group, groups)


def rademacher(d=1, N=2):
    return FiniteLawMoments.from_increments(IncrementDistribution("rademacher", d), N)


def test_degree_examples():
    a12 = var(2, 2, 2, (0, 1))
    assert degree(a12**3) == 6
    assert degree(GradedPolynomial.constant(2, 2, 5)) == 0
    assert degree(var(2, 2, 1, (0,)) ** 3 * a12) == 5
    assert degree(GradedPolynomial(2, 2)) == -math.inf


def test_cbh_examples():
    d, N = 2, 2
    P = var(d, N, 1, (0,))
    assert cbh_compose(P) == var(d, N, 1, (0,), 0, 2) + var(d, N, 1, (0,), 1, 2)
    g = lambda m, w: var(d, N, m, w, 0, 2)  # noqa: E731
    x = lambda m, w: var(d, N, m, w, 1, 2)  # noqa: E731
    expected = g(2, (0, 1)) + x(2, (0, 1)) + Fraction(1, 2) * (g(1, (0,)) * x(1, (1,)) - g(1, (1,)) * x(1, (0,)))
    assert cbh_compose(var(d, N, 2, (0, 1))) == expected
    one = GradedPolynomial.constant(d, N, 1)
    assert cbh_compose(one) == GradedPolynomial.constant(d, N, 1, groups=2)


def test_canonical_text_form():
    assert str(T_apply(var(1, 2, 1, (0,)) ** 4, rademacher())) == "6*a1_1^2 + 1"
    text = str(cbh_compose(var(2, 2, 2, (0, 1))))
    assert text == "1/2*g.a1_1*x.a1_2 - 1/2*g.a1_2*x.a1_1 + g.a2_12 + x.a2_12"
    assert str(GradedPolynomial(2, 2)) == "0"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_cbh_compose_agrees_with_numeric_product(seed, N):
    rng = np.random.default_rng(seed)
    d = 2
    P = var(d, N, 2, (0, 1)) ** 2 + 3 * var(d, N, 1, (1,)) * var(d, N, N, (0,) * (N - 1) + (1,))
    a, b = random_lie(rng, d, N), random_lie(rng, d, N)
    composed = cbh_compose(P)
    chart = lambda L: np.concatenate([lv.ravel() for lv in L.levels[1:]])  # noqa: E731
    lhs = composed.evaluate_numeric(np.concatenate([chart(a), chart(b)]))
    rhs = P.evaluate_numeric(chart(log(truncated_mul(exp(a), exp(b)))))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_T_examples():
    M = GaussianMoments(2, 2, [[Fraction(2), 0], [0, 1]])
    assert T_apply(var(2, 2, 1, (0,)) ** 2, M) == GradedPolynomial.constant(2, 2, 2)
    assert T_apply(var(2, 2, 2, (0, 1)), M).is_zero()
    # a law with a mean area: T a^{2;12} is that mean
    atoms = [(Fraction(1, 2), (1, 0, 0, Fraction(1, 3), Fraction(-1, 3), 0)),
             (Fraction(1, 2), (-1, 0, 0, Fraction(1, 3), Fraction(-1, 3), 0))]
    A = FiniteLawMoments(2, 2, atoms)
    assert T_apply(var(2, 2, 2, (0, 1)), A) == GradedPolynomial.constant(2, 2, Fraction(1, 3))
    # signs in both coordinates plus a mean area of 1/3
    atoms = [(Fraction(1, 4), (s1, s2, 0, Fraction(1, 3), Fraction(-1, 3), 0)) for s1 in (1, -1) for s2 in (1, -1)]
    m = 3
    TP = T_apply(var(2, 2, 2, (0, 1)) ** m, FiniteLawMoments(2, 2, atoms))
    names = str(TP)
    assert TP.degree() == 2 * m - 2
    assert "a2_12^2" in names and "a1_1^2*a2_12" in names


def test_rademacher_quartic_walk_moments():
    M = rademacher()
    P = var(1, 2, 1, (0,)) ** 4
    TP = T_apply(P, M)
    assert TP == 6 * var(1, 2, 1, (0,)) ** 2 + 1
    assert T_apply(TP, M) == GradedPolynomial.constant(1, 2, 6)
    assert T_apply(T_apply(TP, M), M).is_zero()
    assert walk_moment(P, M, 2) == 8
    assert walk_moment(P, M, 0) == P.constant_term() == 0
    series = walk_moment_series(P, M)
    laws = product_laws(M, 6)
    for k in range(7):
        assert walk_moment(P, M, k) == 3 * k**2 - 2 * k == series.value(k)
        assert brute_force_moment(P, M, k, laws[k]) == 3 * k**2 - 2 * k
    assert series.leading_coefficient == 3 and series.degree_in_k == 2


def test_quartic_over_k_squared_tends_to_three():
    s = walk_moment_series(var(1, 2, 1, (0,)) ** 4, rademacher())
    ratios = [float(s.value(k)) / k**2 for k in (10, 100, 1000, 10000)]
    assert all(abs(r - 3) > abs(q - 3) for r, q in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(3, abs=1e-3)
    # Gaussian increments: exactly 3 k^2
    g = walk_moment_series(var(1, 2, 1, (0,)) ** 4, GaussianMoments(1, 2))
    assert g.value(7) == 3 * 49


LAWS = {
    "rademacher": lambda d, N: rademacher(d, N),
    "gaussian": lambda d, N: GaussianMoments(d, N),
    "two-point": lambda d, N: FiniteLawMoments.from_increments(
        IncrementDistribution("two-point-asymmetric", d, normalize=False, prob=0.25), N),
}


@st.composite
def monomial(draw, d, N):
    layout = _layout(d, N)
    exps = [0] * len(layout)
    budget = draw(st.integers(1, 8))
    for _ in range(draw(st.integers(1, 4))):
        i = draw(st.integers(0, len(layout) - 1))
        if layout[i][0] <= budget:
            exps[i] += 1
            budget -= layout[i][0]
    coeff = draw(st.integers(1, 5))
    return GradedPolynomial(d, N, {tuple(exps): Fraction(coeff)})


@pytest.mark.parametrize("law", sorted(LAWS))
@pytest.mark.parametrize("d,N", [(1, 2), (2, 2), (1, 3), (2, 3)])
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_degree_reduction(law, d, N, data):
    M = LAWS[law](d, N)
    assert M.is_centered()
    P = data.draw(monomial(d, N)) + data.draw(monomial(d, N))
    TP = T_apply(P, M)
    assert TP.degree() <= P.degree() - 2


def test_degree_reduction_for_group_valued_increments():
    # centred level 1 with a random area attached; area has weight two
    atoms = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            for eta in (Fraction(1, 2), Fraction(-3, 2)):
                atoms.append((Fraction(1, 8), (s1, s2, 0, eta, -eta, 0)))
    M = FiniteLawMoments(2, 2, atoms)
    P = var(2, 2, 2, (0, 1)) ** 3 * var(2, 2, 1, (1,)) ** 2
    assert T_apply(P, M).degree() <= P.degree() - 2
    laws = product_laws(M, 4)
    for k in range(5):
        assert walk_moment(P, M, k) == brute_force_moment(P, M, k, laws[k])


@pytest.mark.parametrize("P", [
    level_polynomial(2, 3, 2, 3),
    level_polynomial(3, 4, 2, 3),
    var(2, 3, 2, (0, 1)) ** 2 * var(2, 3, 1, (0,)) ** 2 + var(2, 3, 3, (0, 1, 0)) ** 2,
], ids=["level2", "level3", "mixed"])
def test_binomial_identity_matches_brute_force(P):
    M = rademacher(2, 3)
    laws = product_laws(M, 6)
    series = walk_moment_series(P, M)
    for k in range(7):
        exact = brute_force_moment(P, M, k, laws[k])
        assert walk_moment(P, M, k) == exact == series.value(k)


def test_gaussian_walk_moment_against_monte_carlo():
    k, R = 8, 40000
    inc = replica_increments(IncrementDistribution("gaussian", 2), k, 3, range(R))
    X, A = step2_endpoint(inc)
    M = GaussianMoments(2, 2)
    for P, sample in [
        (var(2, 2, 1, (0,)) ** 4, X[:, 0] ** 4),
        (var(2, 2, 2, (0, 1)) ** 2, A[:, 0, 1] ** 2),
        (var(2, 2, 2, (0, 1)) ** 2 * var(2, 2, 1, (1,)) ** 2, A[:, 0, 1] ** 2 * X[:, 1] ** 2),
    ]:
        exact = float(walk_moment(P, M, k))
        se = sample.std() / math.sqrt(R)
        assert abs(sample.mean() - exact) <= 4 * se


def test_unresolved_moments():
    P = var(1, 2, 1, (0,)) ** 6
    capped = GaussianMoments(1, 2)
    capped.max_degree = 4
    with pytest.raises(UnresolvedMomentError, match="a1_1\\^6"):
        T_apply(P, capped)
    table = TableMoments(1, 2, {(1, 0): 0, (2, 0): 1})
    assert T_apply(var(1, 2, 1, (0,)) ** 2, table) == GradedPolynomial.constant(1, 2, 1)
    with pytest.raises(UnresolvedMomentError, match="E\\[a1_1\\^3\\]"):
        T_apply(var(1, 2, 1, (0,)) ** 3, table)
    with pytest.raises(UnresolvedMomentError):
        MomentOracle(1, 2).moment((1, 0))


def test_moment_oracle_covariance_and_centering():
    M = GaussianMoments(2, 2, [[2, 1], [1, 3]])
    assert M.covariance() == [[2, 1], [1, 3]]
    assert M.moment((2, 2, 0, 0, 0, 0)) == 2 * 3 + 2 * 1
    shifted = FiniteLawMoments(1, 2, [(Fraction(1, 2), (2, 0)), (Fraction(1, 2), (0, 0))])
    assert not shifted.is_centered()
    with pytest.raises(ValueError):
        FiniteLawMoments(1, 2, [(Fraction(1, 3), (1, 0))])


@pytest.mark.parametrize("p,N,q0,p_star,alpha,adm", [
    (4, 2, 4, 4, Fraction(3, 8), True),
    (5, 2, 4, 4, Fraction(3, 8), True),
    (3.9, 2, 2, 2, Fraction(1, 4), False),
    (6, 3, 6, 6, Fraction(5, 12), True),
    (4, 3, 3, 4, Fraction(3, 8), True),
    (3, 3, 2, 2, Fraction(1, 4), False),
    (9, 4, 8, 8, Fraction(7, 16), True),
])
def test_tightness_exponents(p, N, q0, p_star, alpha, adm):
    e = tightness_exponents(p, N)
    assert (e.q0, e.p_star, e.alpha_star, e.admissible) == (q0, p_star, alpha, adm)


def test_tightness_exponent_errors_and_q0_definition():
    for bad in (1, 0.5, -2):
        with pytest.raises(ValueError):
            tightness_exponents(bad, 2)
    with pytest.raises(ValueError):
        tightness_exponents(4, 0)
    rng = np.random.default_rng(0)
    for p in rng.uniform(1.01, 20, 50):
        for N in range(1, 6):
            e = tightness_exponents(p, N)
            assert e.q0 == min(m * math.floor(p / m) for m in range(1, N + 1))
            assert e.q0 <= math.floor(p)
            if p < 4 and N >= 2:
                assert e.q0 <= 3


def test_level_polynomials():
    assert level_polynomial(1, 2, 1, 2) == var(1, 2, 1, (0,)) ** 4
    P = level_polynomial(2, 4, 2, 2)
    assert degree(P) == 8 and len(P.terms) == 4
    rng = np.random.default_rng(1)
    for _ in range(20):
        N = int(rng.integers(1, 4))
        m = int(rng.integers(1, N + 1))
        p = float(rng.uniform(1, 9))
        assert degree(level_polynomial(m, p, 2, N)) == 2 * m * math.floor(p / m)
    with pytest.raises(ValueError):
        level_polynomial(3, 4, 2, 2)
    assert degree(norm_polynomial(2, 2)) == 8


def test_evaluate_at_group_elements():
    rng = np.random.default_rng(2)
    a = random_lie(rng, 2, 2)
    P = var(2, 2, 2, (0, 1)) * 2 + var(2, 2, 1, (1,)) ** 2
    expected = 2 * a.levels[2][1] + a.levels[1][1] ** 2
    assert float(P.evaluate_at(exp(a))) == pytest.approx(expected, abs=1e-12)
    assert float(P.evaluate_at(a)) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        P.evaluate([0.0] * 6, [0.0] * 6)
    with pytest.raises(ValueError):
        var(2, 2, 3, (0, 1, 1))
    with pytest.raises(ValueError):
        P + var(2, 3, 1, (0,))

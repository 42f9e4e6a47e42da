"""Exact graded polynomials on the log chart of G^N(R^d) and the operator T.

Variables are the log coordinates ``a^{m;w}`` for every level ``m = 1..N`` and
every word ``w`` of length ``m`` (the full level arrays, not a Hall basis).
A variable of level ``m`` has weight ``m``; the graded degree of a monomial is
the weighted sum of its exponents.

For an increment law ``xi`` the operator

    (T P)(g) = E[P(g (x) xi)] - P(g)

maps polynomials to polynomials.  It is computed exactly: the log of a product
``exp(a_g) (x) exp(a_xi)`` is expanded symbolically in the truncated tensor
algebra (finite by nilpotency), the ``xi`` monomials are replaced by exact
moments, and ``P`` is subtracted.  Iterating gives the walk moments

    E[P(xi_1 (x) ... (x) xi_k)] = sum_l C(k, l) (T^l P)(1).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .tensor import GroupElement, LieElement, TensorSeries, exp, log, truncated_mul


class UnresolvedMomentError(KeyError):
    """A required increment moment is unavailable (or infinite)."""


@functools.lru_cache(maxsize=None)
def _layout(dim: int, depth: int) -> tuple:
    """``(level, word)`` for each variable of one log chart, in storage order."""
    out = []
    for m in range(1, depth + 1):
        for flat in range(dim**m):
            out.append((m, tuple(int(i) for i in np.unravel_index(flat, (dim,) * m))))
    return tuple(out)


def _var_name(m: int, word: tuple) -> str:
    return f"a{m}_" + "".join(str(i + 1) for i in word)


class GradedPolynomial:
    """Polynomial with ``Fraction`` coefficients in one or two log charts.

    ``terms`` maps exponent tuples (length ``groups * n_vars``) to non-zero
    coefficients.  ``groups == 2`` is used for compositions ``P(g (x) xi)``,
    where the first block belongs to ``g`` and the second to ``xi``.
    """

    __slots__ = ("dim", "depth", "groups", "terms")

    GROUP_PREFIX = ("g.", "x.")

    def __init__(self, dim: int, depth: int, terms: Mapping[tuple, Fraction] | None = None, groups: int = 1):
        self.dim = dim
        self.depth = depth
        self.groups = groups
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    # construction -------------------------------------------------------

    @property
    def nvars(self) -> int:
        return self.groups * len(_layout(self.dim, self.depth))

    @classmethod
    def constant(cls, dim, depth, c, groups=1):
        p = cls(dim, depth, groups=groups)
        zero = (0,) * p.nvars
        return cls(dim, depth, {zero: Fraction(c)}, groups)

    @classmethod
    def variable(cls, dim, depth, m: int, word, group: int = 0, groups: int = 1):
        """The coordinate ``a^{m; word}`` (0-based letters) of chart ``group``."""
        word = tuple(word)
        layout = _layout(dim, depth)
        try:
            idx = layout.index((m, word))
        except ValueError:
            raise ValueError(f"no coordinate a^{{{m};{word}}} for d={dim}, N={depth}") from None
        exps = [0] * (groups * len(layout))
        exps[group * len(layout) + idx] = 1
        return cls(dim, depth, {tuple(exps): Fraction(1)}, groups)

    def _like(self, terms):
        return GradedPolynomial(self.dim, self.depth, terms, self.groups)

    def _coerce(self, other):
        if isinstance(other, GradedPolynomial):
            if (other.dim, other.depth, other.groups) != (self.dim, self.depth, self.groups):
                raise ValueError("polynomials live on different charts")
            return other
        if isinstance(other, (int, Fraction)):
            return GradedPolynomial.constant(self.dim, self.depth, other, self.groups)
        return NotImplemented

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return self._like(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self._like({k: v * other for k, v in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0) + v1 * v2
        return self._like(terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = GradedPolynomial.constant(self.dim, self.depth, 1, self.groups)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    # grading --------------------------------------------------------------

    def weights(self) -> tuple:
        w = tuple(m for m, _ in _layout(self.dim, self.depth))
        return w * self.groups

    def monomial_degree(self, exps) -> int:
        return sum(e * w for e, w in zip(exps, self.weights()))

    def degree(self) -> float:
        """Graded degree; ``-inf`` for the zero polynomial."""
        if not self.terms:
            return -math.inf
        w = self.weights()
        return max(sum(e * wi for e, wi in zip(k, w)) for k in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    # evaluation -------------------------------------------------------------

    def evaluate(self, *charts):
        """Value at log coordinates given as flat sequences, one per chart.

        Each chart lists the coordinates in storage order (level 1 words,
        then level 2 words, ...), e.g. ``np.concatenate(L.levels[1:])``.
        """
        if len(charts) != self.groups:
            raise ValueError(f"expected {self.groups} coordinate vectors")
        coords = [c for chart in charts for c in chart]
        total = 0
        for k, v in self.terms.items():
            term = v
            for x, e in zip(coords, k):
                if e:
                    term = term * x**e
            total = total + term
        return total

    def evaluate_numeric(self, coords) -> np.ndarray:
        """Float evaluation at a batch of charts, ``coords`` shaped ``(..., nvars)``."""
        coords = np.asarray(coords, dtype=float)
        total = np.zeros(coords.shape[:-1])
        for k, v in self.terms.items():
            term = np.full(coords.shape[:-1], float(v))
            for i, e in enumerate(k):
                if e:
                    term = term * coords[..., i] ** e
            total += term
        return total

    def evaluate_at(self, *elements: TensorSeries):
        """Value at group elements (via their logs) or Lie elements."""
        charts = []
        for el in elements:
            lie = el if isinstance(el, LieElement) else log(el)
            charts.append(list(np.concatenate([lv.ravel() for lv in lie.levels[1:]])))
        return self.evaluate(*charts)

    # text -----------------------------------------------------------------

    def _names(self):
        base = [_var_name(m, w) for m, w in _layout(self.dim, self.depth)]
        if self.groups == 1:
            return base
        return [p + n for p in self.GROUP_PREFIX[: self.groups] for n in base]

    def sorted_terms(self):
        """Terms ordered by descending graded degree, then descending exponents."""
        return sorted(self.terms.items(), key=lambda kv: (-self.monomial_degree(kv[0]), tuple(-e for e in kv[0])))

    def __str__(self):
        if not self.terms:
            return "0"
        names = self._names()
        parts = []
        for k, v in self.sorted_terms():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, k) if e]
            mono = "*".join(factors)
            if not mono:
                parts.append(str(v))
            elif v == 1:
                parts.append(mono)
            elif v == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{v}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"GradedPolynomial({self})"


def variables(dim: int, depth: int, group: int = 0, groups: int = 1) -> dict:
    """All chart coordinates keyed by ``(level, word)``."""
    return {(m, w): GradedPolynomial.variable(dim, depth, m, w, group, groups) for m, w in _layout(dim, depth)}


def degree(P: GradedPolynomial) -> float:
    return P.degree()


# composition with the group law -------------------------------------------------


def _symbolic_lie(dim: int, depth: int, group: int) -> LieElement:
    vs = variables(dim, depth, group, groups=2)
    levels = [np.array([0], dtype=object)]
    for m in range(1, depth + 1):
        lv = np.empty(dim**m, dtype=object)
        for flat in range(dim**m):
            w = tuple(int(i) for i in np.unravel_index(flat, (dim,) * m))
            lv[flat] = vs[(m, w)]
        levels.append(lv)
    return LieElement(dim, depth, levels)


@functools.lru_cache(maxsize=None)
def product_chart(dim: int, depth: int) -> tuple:
    """``log(exp(a_g) (x) exp(a_xi))`` coordinate by coordinate, as polynomials.

    This is the truncated Campbell-Baker-Hausdorff map, obtained mechanically
    from the tensor-algebra exp/log with rational coefficients.
    """
    A_g = _symbolic_lie(dim, depth, 0)
    A_x = _symbolic_lie(dim, depth, 1)
    L = log(truncated_mul(exp(A_g), exp(A_x)))
    zero = GradedPolynomial(dim, depth, groups=2)
    out = []
    for m in range(1, depth + 1):
        for c in L.levels[m]:
            out.append(c if isinstance(c, GradedPolynomial) else zero + c)
    return tuple(out)


def cbh_compose(P: GradedPolynomial) -> GradedPolynomial:
    """The polynomial ``(a_g, a_xi) -> P(log(exp(a_g) (x) exp(a_xi)))``."""
    if P.groups != 1:
        raise ValueError("cbh_compose expects a single-chart polynomial")
    chart = product_chart(P.dim, P.depth)
    powers: dict = {}

    def power(i, e):
        key = (i, e)
        if key not in powers:
            powers[key] = chart[i] ** e
        return powers[key]

    result = GradedPolynomial(P.dim, P.depth, groups=2)
    one = GradedPolynomial.constant(P.dim, P.depth, 1, groups=2)
    for k, v in P.terms.items():
        term = one
        for i, e in enumerate(k):
            if e:
                term = term * power(i, e)
        result = result + term * v
    return result


# moments of the increment law ---------------------------------------------------


class MomentOracle:
    """Exact moments ``E[prod (a_xi)^e]`` of the increment's log coordinates.

    ``max_degree`` bounds the graded degree of moments that may be requested
    (``None`` for all orders); anything beyond raises
    :class:`UnresolvedMomentError`.
    """

    def __init__(self, dim: int, depth: int, max_degree: float | None = None, name: str = "custom"):
        self.dim = dim
        self.depth = depth
        self.max_degree = max_degree
        self.name = name
        self._cache: dict = {}

    def _weights(self):
        return tuple(m for m, _ in _layout(self.dim, self.depth))

    def moment(self, exps: tuple) -> Fraction:
        exps = tuple(exps)
        if exps in self._cache:
            return self._cache[exps]
        deg = sum(e * w for e, w in zip(exps, self._weights()))
        if self.max_degree is not None and deg > self.max_degree:
            raise UnresolvedMomentError(
                f"moment {self.describe(exps)} has degree {deg} > declared {self.max_degree}")
        value = self._compute(exps)
        self._cache[exps] = value
        return value

    def _compute(self, exps) -> Fraction:
        raise UnresolvedMomentError(f"moment {self.describe(exps)} not available")

    def describe(self, exps) -> str:
        names = [_var_name(m, w) for m, w in _layout(self.dim, self.depth)]
        parts = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e]
        return "E[" + ("*".join(parts) or "1") + "]"

    def is_centered(self) -> bool:
        n = len(_layout(self.dim, self.depth))
        for i in range(self.dim):
            e = [0] * n
            e[i] = 1
            if self.moment(tuple(e)) != 0:
                return False
        return True

    def covariance(self) -> list:
        n = len(_layout(self.dim, self.depth))
        cov = []
        for i in range(self.dim):
            row = []
            for j in range(self.dim):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                row.append(self.moment(tuple(e)))
            cov.append(row)
        return cov


class TableMoments(MomentOracle):
    """Moments from an explicit table keyed by exponent tuples."""

    def __init__(self, dim, depth, table: Mapping[tuple, Fraction], max_degree=None, name="table"):
        super().__init__(dim, depth, max_degree, name)
        self._table = {tuple(k): Fraction(v) for k, v in table.items()}

    def _compute(self, exps):
        zero = (0,) * len(exps)
        if exps == zero:
            return Fraction(1)
        if exps not in self._table:
            raise UnresolvedMomentError(f"moment {self.describe(exps)} not in table")
        return self._table[exps]


class FiniteLawMoments(MomentOracle):
    """Moments of a finitely supported law, given by atoms in the log chart."""

    def __init__(self, dim, depth, atoms: Iterable[tuple[Fraction, Iterable]], name="finite"):
        super().__init__(dim, depth, None, name)
        self.atoms = [(Fraction(p), tuple(Fraction(c) for c in coords)) for p, coords in atoms]
        total = sum(p for p, _ in self.atoms)
        if total != 1:
            raise ValueError(f"atom probabilities sum to {total}, not 1")

    @classmethod
    def from_increments(cls, distribution, depth: int):
        """``xi = exp(v)`` with ``v`` from a finitely supported increment law."""
        d = distribution.dim
        n_higher = sum(d**m for m in range(2, depth + 1))
        atoms = [(p, tuple(v) + (0,) * n_higher) for p, v in distribution.exact_support()]
        return cls(d, depth, atoms, name=distribution.kind)

    @classmethod
    def from_group_atoms(cls, atoms, name="group"):
        """Atoms given as ``(probability, GroupElement)`` with exact entries."""
        atoms = list(atoms)
        d, depth = atoms[0][1].dim, atoms[0][1].depth
        out = []
        for p, g in atoms:
            lie = log(g)
            out.append((p, tuple(np.concatenate([lv.ravel() for lv in lie.levels[1:]]))))
        return cls(d, depth, out, name=name)

    def _compute(self, exps):
        total = Fraction(0)
        for p, coords in self.atoms:
            term = p
            for x, e in zip(coords, exps):
                if e:
                    term *= x**e
            total += term
        return total


def _isserlis(indices: list, cov) -> Fraction:
    if not indices:
        return Fraction(1)
    if len(indices) % 2:
        return Fraction(0)
    first, rest = indices[0], indices[1:]
    total = Fraction(0)
    for j in range(len(rest)):
        c = cov[first][rest[j]]
        if c:
            total += c * _isserlis(rest[:j] + rest[j + 1:], cov)
    return total


class GaussianMoments(MomentOracle):
    """``xi = exp(v)`` with ``v ~ N(0, cov)``; moments by Wick/Isserlis pairing."""

    def __init__(self, dim, depth, cov=None, name="gaussian"):
        super().__init__(dim, depth, None, name)
        if cov is None:
            cov = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
        self.cov = [[Fraction(c) for c in row] for row in cov]

    def _compute(self, exps):
        if any(exps[self.dim:]):
            return Fraction(0)
        idx = [i for i in range(self.dim) for _ in range(exps[i])]
        if len(idx) % 2:
            return Fraction(0)
        # product of independent blocks is cheaper when cov is diagonal
        if all(self.cov[i][j] == 0 for i in range(self.dim) for j in range(self.dim) if i != j):
            total = Fraction(1)
            for i in range(self.dim):
                k = exps[i]
                if k % 2:
                    return Fraction(0)
                total *= self.cov[i][i] ** (k // 2) * math.prod(range(k - 1, 0, -2))
            return total
        return _isserlis(idx, self.cov)


# the operator T and its iterates -------------------------------------------------


def T_apply(P: GradedPolynomial, M: MomentOracle) -> GradedPolynomial:
    """``(T P)(g) = E[P(g (x) xi)] - P(g)`` with moments from ``M``."""
    if (P.dim, P.depth) != (M.dim, M.depth):
        raise ValueError("polynomial and moment oracle use different charts")
    composed = cbh_compose(P)
    n = len(_layout(P.dim, P.depth))
    terms: dict = {}
    for k, v in composed.terms.items():
        kg, kx = k[:n], k[n:]
        mom = M.moment(kx)
        if mom:
            terms[kg] = terms.get(kg, 0) + v * mom
    return GradedPolynomial(P.dim, P.depth, terms) - P


@dataclass(frozen=True)
class WalkMomentSeries:
    """``E[P(xi_1 ... xi_k)] = sum_l C(k, l) c_l`` with ``c_l = (T^l P)(1)``."""

    coefficients: tuple  # c_0, c_1, ..., c_L (trailing zeros removed)
    iterate_degrees: tuple  # graded degree of T^l P

    def value(self, k: int) -> Fraction:
        if k < 0:
            raise ValueError("k must be non-negative")
        return sum((math.comb(k, l) * c for l, c in enumerate(self.coefficients)), Fraction(0))

    @property
    def degree_in_k(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading_coefficient(self) -> Fraction:
        """Coefficient of ``k^L`` in the polynomial ``k -> value(k)``."""
        if not self.coefficients:
            return Fraction(0)
        L = self.degree_in_k
        return self.coefficients[-1] / math.factorial(L)


def walk_moment_series(P: GradedPolynomial, M: MomentOracle, max_iter: int | None = None) -> WalkMomentSeries:
    """All iterates ``T^l P`` until they vanish.

    For centred laws the graded degree drops by at least two per iteration,
    so at most ``deg(P)/2 + 1`` iterations are needed; ``max_iter`` guards
    against laws where it does not.
    """
    if max_iter is None:
        max_iter = int(max(P.degree(), 0)) + 2
    coeffs = []
    degs = []
    current = P
    for _ in range(max_iter + 1):
        if current.is_zero():
            break
        coeffs.append(current.constant_term())
        degs.append(current.degree())
        current = T_apply(current, M)
    else:
        raise RuntimeError("T^l P did not vanish; is the increment law centred?")
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return WalkMomentSeries(tuple(coeffs), tuple(degs))


def walk_moment(P: GradedPolynomial, M: MomentOracle, k: int) -> Fraction:
    """Exact ``E[P(xi_1 (x) ... (x) xi_k)] = ((T + 1)^k P)(1)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return P.constant_term()
    coeffs = []
    current = P
    for l in range(k + 1):
        if current.is_zero():
            break
        coeffs.append(current.constant_term())
        if l < k:
            current = T_apply(current, M)
    return sum((math.comb(k, l) * c for l, c in enumerate(coeffs)), Fraction(0))


# brute force ---------------------------------------------------------------------


def _exact_group(coords: tuple, dim: int, depth: int) -> GroupElement:
    levels = [np.array([Fraction(0)], dtype=object)]
    i = 0
    for m in range(1, depth + 1):
        lv = np.empty(dim**m, dtype=object)
        lv[:] = list(coords[i:i + dim**m])
        levels.append(lv)
        i += dim**m
    return exp(LieElement(dim, depth, levels))


def _law_atoms(law) -> list:
    out = []
    for p, g in law.values():
        lie = log(g)
        out.append((p, tuple(np.concatenate([lv.ravel() for lv in lie.levels[1:]]))))
    return out


def product_laws(M: FiniteLawMoments, k_max: int) -> list[list[tuple[Fraction, tuple]]]:
    """Exact laws of ``xi_1 (x) ... (x) xi_k`` for ``k = 0..k_max`` (log-chart atoms).

    Computed by repeated convolution in the group with merging of equal atoms.
    """
    d, depth = M.dim, M.depth
    steps = [(p, _exact_group(c, d, depth)) for p, c in M.atoms]
    unit = GroupElement.unit(d, depth, dtype=object)
    law = {tuple(unit.coefficients()): (Fraction(1), unit)}
    laws = [_law_atoms(law)]
    for _ in range(k_max):
        new: dict = {}
        for p, g in law.values():
            for q, s in steps:
                h = truncated_mul(g, s)
                key = tuple(h.coefficients())
                if key in new:
                    new[key] = (new[key][0] + p * q, h)
                else:
                    new[key] = (p * q, h)
        law = new
        laws.append(_law_atoms(law))
    return laws


def product_law(M: FiniteLawMoments, k: int) -> list[tuple[Fraction, tuple]]:
    """Exact law of ``xi_1 (x) ... (x) xi_k`` as atoms in the log chart."""
    return product_laws(M, k)[-1]


def brute_force_moment(P: GradedPolynomial, M: FiniteLawMoments, k: int, law=None) -> Fraction:
    """``E[P(xi_1 ... xi_k)]`` by exact enumeration of all increment sequences."""
    law = product_law(M, k) if law is None else law
    return sum((p * P.evaluate(coords) for p, coords in law), Fraction(0))


# exponent calculus ---------------------------------------------------------------


@dataclass(frozen=True)
class TightnessExponents:
    p: float
    depth: int
    q0: int  # min_m m * floor(p / m)
    p_star: int  # min(floor(p), 2 floor(p / 2))
    alpha_star: Fraction  # (p* - 1) / (2 p*)
    alpha_q0: Fraction  # (q0 - 1) / (2 q0)
    admissible: bool  # q0 > 1 + 2 / (N - 1): a Hoelder exponent above 1/(N+1) is reachable

    def as_dict(self):
        return {
            "p": self.p, "N": self.depth, "q0": self.q0, "p_star": self.p_star,
            "alpha_star": str(self.alpha_star), "alpha_q0": str(self.alpha_q0),
            "admissible": self.admissible,
        }


def _exponent(q: int) -> Fraction:
    return Fraction(q - 1, 2 * q) if q > 0 else Fraction(0)


def tightness_exponents(p: float, N: int) -> TightnessExponents:
    """Integrability exponents ``q0(p, N)``, ``p*`` and the Hoelder bound ``alpha*``."""
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if N < 1:
        raise ValueError("N must be positive")
    q0 = min(m * math.floor(p / m) for m in range(1, N + 1))
    p_star = min(math.floor(p), 2 * math.floor(p / 2))
    if N >= 2:
        admissible = Fraction(q0) > 1 + Fraction(2, N - 1)
    else:
        admissible = False
    return TightnessExponents(p, N, q0, p_star, _exponent(p_star), _exponent(q0), bool(admissible))


def level_polynomial(m: int, p: float, dim: int, depth: int) -> GradedPolynomial:
    """``sum_w (a^{m;w})^{2 floor(p/m)}`` over all words of length ``m``."""
    if not 1 <= m <= depth:
        raise ValueError(f"level {m} outside 1..{depth}")
    power = 2 * math.floor(p / m)
    total = GradedPolynomial(dim, depth)
    for word in itertools.product(range(dim), repeat=m):
        total = total + GradedPolynomial.variable(dim, depth, m, word) ** power
    return total


def norm_polynomial(p: int, dim: int, depth: int = 2) -> GradedPolynomial:
    """``sum_i (a^{1;i})^{4p} + sum_{i<j} (a^{2;ij})^{2p}``, the degree-4p norm surrogate."""
    total = GradedPolynomial(dim, depth)
    for i in range(dim):
        total = total + GradedPolynomial.variable(dim, depth, 1, (i,)) ** (4 * p)
    if depth >= 2:
        for i in range(dim):
            for j in range(i + 1, dim):
                total = total + GradedPolynomial.variable(dim, depth, 2, (i, j)) ** (2 * p)
    return total

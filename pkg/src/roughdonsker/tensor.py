"""Truncated tensor algebra and the free nilpotent group G^N(R^d).

An element of R + R^d + ... + (R^d)^{(x)N} is stored level by level as dense
flat arrays; level ``m`` has ``d**m`` entries in lexicographic word order, so
the word ``(i1, ..., im)`` sits at flat index ``i1*d**(m-1) + ... + im``.

Every array may carry leading batch dimensions: level ``m`` has shape
``(*batch, d**m)``.  All operations broadcast over the batch, which is what the
Monte Carlo code relies on.  Arrays of ``dtype=object`` are supported as well;
the exact (rational / polynomial) machinery in :mod:`roughdonsker.graded` runs
the very same routines with ``Fraction`` or polynomial entries.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Operands live in different tensor algebras."""


class DomainError(ValueError):
    """Input outside the domain of an operation (e.g. log of a non-unit)."""


def _ratio(num: int, den: int, dtype) -> float | Fraction:
    if dtype == object:
        return Fraction(num, den)
    return num / den


class TensorSeries:
    """Truncated tensor series, possibly batched.

    ``levels[m]`` has shape ``(*batch, dim**m)``; level 0 has a trailing axis of
    length one so that every level can be handled uniformly.
    """

    __slots__ = ("dim", "depth", "levels")

    def __init__(self, dim: int, depth: int, levels: Sequence[np.ndarray]):
        if dim < 1 or depth < 1:
            raise ValueError(f"dimension and depth must be positive, got d={dim}, N={depth}")
        if len(levels) != depth + 1:
            raise ValueError(f"expected {depth + 1} levels, got {len(levels)}")
        levels = tuple(np.asarray(lv) for lv in levels)
        batch = levels[0].shape[:-1]
        for m, lv in enumerate(levels):
            if lv.shape[-1:] != (dim**m,):
                raise ValueError(f"level {m} must have {dim**m} entries, got shape {lv.shape}")
            if lv.shape[:-1] != batch:
                raise ValueError("all levels must share the same batch shape")
        self.dim = dim
        self.depth = depth
        self.levels = levels

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, dim: int, depth: int, batch: tuple = (), dtype=float):
        levels = [np.zeros(batch + (dim**m,), dtype=dtype) for m in range(depth + 1)]
        if dtype == object:
            for lv in levels:
                lv[...] = 0
        return cls(dim, depth, levels)

    @classmethod
    def unit(cls, dim: int, depth: int, batch: tuple = (), dtype=float):
        z = TensorSeries.zeros(dim, depth, batch, dtype)
        z.levels[0][...] = 1
        return cls(dim, depth, z.levels)

    @classmethod
    def from_tensors(cls, dim: int, depth: int, tensors: Sequence) -> "TensorSeries":
        """Build from per-level tensors of shape ``(*batch, d, ..., d)``.

        ``tensors`` lists levels 1..N; the scalar level is 1 for group
        elements and 0 otherwise.
        """
        if len(tensors) != depth:
            raise ValueError(f"expected {depth} level tensors, got {len(tensors)}")
        arrs = [np.asarray(t) for t in tensors]
        flat = []
        batch = None
        for m, t in enumerate(arrs, start=1):
            b = t.shape[: t.ndim - m]
            if t.shape[t.ndim - m:] != (dim,) * m:
                raise ValueError(f"level {m} tensor must end in shape {(dim,) * m}, got {t.shape}")
            batch = b if batch is None else np.broadcast_shapes(batch, b)
            flat.append(t.reshape(b + (dim**m,)))
        flat = [np.broadcast_to(f, batch + f.shape[-1:]).copy() for f in flat]
        dtype = object if any(f.dtype == object for f in flat) else float
        scalar = np.full(batch + (1,), cls._scalar_level(), dtype=dtype)
        return cls(dim, depth, [scalar] + flat)

    @staticmethod
    def _scalar_level():
        return 0

    # access ---------------------------------------------------------------

    @property
    def batch_shape(self) -> tuple:
        return self.levels[0].shape[:-1]

    @property
    def dtype(self):
        return np.result_type(*self.levels)

    def level(self, m: int) -> np.ndarray:
        """Level ``m`` reshaped to ``(*batch, d, ..., d)``."""
        return self.levels[m].reshape(self.batch_shape + (self.dim,) * m)

    def __getitem__(self, idx) -> "TensorSeries":
        if not self.batch_shape:
            raise IndexError("cannot index an unbatched tensor series")
        if not isinstance(idx, tuple):
            idx = (idx,)
        levels = [lv[idx + (Ellipsis, slice(None))] for lv in self.levels]
        return type(self)(self.dim, self.depth, levels)

    def __len__(self):
        if not self.batch_shape:
            raise TypeError("unbatched tensor series has no length")
        return self.batch_shape[0]

    def coefficients(self) -> np.ndarray:
        """All levels concatenated along the last axis."""
        return np.concatenate(self.levels, axis=-1)

    def max_abs_diff(self, other: "TensorSeries") -> float:
        _check_compatible(self, other)
        return float(max(np.max(np.abs(a - b)) for a, b in zip(self.levels, other.levels)))

    def allclose(self, other: "TensorSeries", atol: float = 1e-12) -> bool:
        return self.max_abs_diff(other) <= atol

    def astype(self, cls):
        return cls(self.dim, self.depth, self.levels)

    # linear structure (internal helpers for the series below) ---------------

    def _combine(self, other, op) -> "TensorSeries":
        _check_compatible(self, other)
        return TensorSeries(self.dim, self.depth, [op(a, b) for a, b in zip(self.levels, other.levels)])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def scale(self, c) -> "TensorSeries":
        return TensorSeries(self.dim, self.depth, [c * lv for lv in self.levels])

    def __neg__(self):
        return self.scale(-1)

    def __repr__(self):
        name = type(self).__name__
        if self.batch_shape:
            return f"{name}(d={self.dim}, N={self.depth}, batch={self.batch_shape})"
        body = ", ".join(np.array2string(lv, precision=6) for lv in self.levels)
        return f"{name}(d={self.dim}, N={self.depth}, [{body}])"


class GroupElement(TensorSeries):
    """Point of G^N(R^d): a tensor series with unit scalar level.

    Group-likeness is not enforced; it holds for everything produced by
    :func:`exp`, :func:`truncated_mul`, :func:`inverse` and :func:`dilate`.
    """

    __slots__ = ()

    @staticmethod
    def _scalar_level():
        return 1


class LieElement(TensorSeries):
    """Log-chart coordinates: a tensor series with zero scalar level.

    The full level arrays are stored.  :meth:`bracket_coordinates` exposes the
    antisymmetric level-2 part in the ``i < j`` convention.
    """

    __slots__ = ()

    @classmethod
    def from_vector(cls, v, depth: int) -> "LieElement":
        v = np.asarray(v, dtype=float if np.asarray(v).dtype != object else object)
        d = v.shape[-1]
        batch = v.shape[:-1]
        zero = TensorSeries.zeros(d, depth, batch, dtype=v.dtype)
        levels = list(zero.levels)
        levels[1] = v.copy()
        return cls(d, depth, levels)

    @classmethod
    def bracket(cls, dim: int, depth: int, i: int, j: int, c=1.0) -> "LieElement":
        """``c * (e_i (x) e_j - e_j (x) e_i)`` placed at level 2."""
        if depth < 2:
            raise DomainError("brackets need depth >= 2")
        z = TensorSeries.zeros(dim, depth)
        lv = z.levels[2].reshape(dim, dim)
        lv[i, j] += c
        lv[j, i] -= c
        return cls(dim, depth, z.levels)

    def bracket_coordinates(self) -> np.ndarray:
        """Antisymmetric level-2 coordinates ``a^{2;ij}``, ``i < j``.

        Returned with shape ``(*batch, d*(d-1)/2)`` in row-major ``(i, j)``
        order.
        """
        if self.depth < 2:
            raise DomainError("depth-1 elements have no bracket part")
        a2 = self.level(2)
        iu, ju = np.triu_indices(self.dim, k=1)
        return 0.5 * (a2[..., iu, ju] - a2[..., ju, iu])


def _check_compatible(a: TensorSeries, b: TensorSeries):
    if a.dim != b.dim or a.depth != b.depth:
        raise DimensionError(
            f"operands differ: (d={a.dim}, N={a.depth}) vs (d={b.dim}, N={b.depth})"
        )


def _outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    prod = x[..., :, None] * y[..., None, :]
    return prod.reshape(prod.shape[:-2] + (-1,))


def _mul_levels(a: Sequence[np.ndarray], b: Sequence[np.ndarray], depth: int, lo: int = 0):
    out = []
    for m in range(depth + 1):
        if m < lo:
            out.append(None)
            continue
        acc = None
        for j in range(m + 1):
            term = _outer(a[j], b[m - j])
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def truncated_mul(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """Product in the truncated tensor algebra (the group law on G^N)."""
    _check_compatible(a, b)
    levels = _mul_levels(a.levels, b.levels, a.depth)
    cls = GroupElement if isinstance(a, GroupElement) and isinstance(b, GroupElement) else TensorSeries
    return cls(a.dim, a.depth, levels)


def _nilpotent_power_series(x: TensorSeries, coeffs) -> TensorSeries:
    """``sum_k coeffs[k] * x^k`` for ``x`` with zero scalar level, k = 0..N."""
    d, depth = x.dim, x.depth
    dtype = x.dtype
    batch = x.batch_shape
    result = TensorSeries.zeros(d, depth, batch, dtype=dtype).levels
    result = [lv.copy() for lv in result]
    result[0] = result[0] + coeffs[0]
    power = list(x.levels)
    for k in range(1, depth + 1):
        if k > 1:
            # x^k vanishes below level k; skip those levels
            power = _mul_levels(power, x.levels, depth, lo=k)
            for m in range(k):
                power[m] = np.zeros_like(result[m])
        c = coeffs[k]
        for m in range(k, depth + 1):
            result[m] = result[m] + c * power[m]
    return TensorSeries(d, depth, result)


def exp(a: TensorSeries) -> GroupElement:
    """Truncated exponential of an element with zero scalar level."""
    dtype = a.dtype
    x = TensorSeries(a.dim, a.depth, [np.zeros_like(a.levels[0])] + list(a.levels[1:]))
    fact = 1
    coeffs = [1]
    for k in range(1, a.depth + 1):
        fact *= k
        coeffs.append(_ratio(1, fact, dtype))
    return _nilpotent_power_series(x, coeffs).astype(GroupElement)


def log(g: TensorSeries) -> LieElement:
    """Truncated logarithm; the inverse of :func:`exp` on group elements."""
    scalar = g.levels[0]
    if scalar.dtype != object and not np.all(scalar == 1):
        raise DomainError("log requires scalar level equal to 1")
    if scalar.dtype == object and not all(s == 1 for s in scalar.ravel()):
        raise DomainError("log requires scalar level equal to 1")
    dtype = g.dtype
    x = TensorSeries(g.dim, g.depth, [np.zeros_like(scalar)] + list(g.levels[1:]))
    coeffs = [0] + [(1 if k % 2 else -1) * _ratio(1, k, dtype) for k in range(1, g.depth + 1)]
    return _nilpotent_power_series(x, coeffs).astype(LieElement)


def inverse(g: GroupElement) -> GroupElement:
    """Group inverse, computed as ``exp(-log g)``."""
    return exp(-log(g))


def dilate(lam, g: TensorSeries) -> TensorSeries:
    """Dilation: level ``m`` multiplied by ``lam**m``."""
    levels = [lv * (lam**m) if m else lv.copy() for m, lv in enumerate(g.levels)]
    return type(g)(g.dim, g.depth, levels)


def project(m: int, x: TensorSeries) -> np.ndarray:
    """Level-``m`` log-chart block, shaped ``(*batch, d, ..., d)``.

    Group elements are first mapped to the log chart; Lie elements are
    projected directly.
    """
    if not 1 <= m <= x.depth:
        raise ValueError(f"level {m} outside 1..{x.depth}")
    if not isinstance(x, LieElement):
        x = log(x)
    return x.level(m)


def exp_vector(v, depth: int) -> GroupElement:
    """``exp`` of a (batch of) level-1 vector(s)."""
    return exp(LieElement.from_vector(v, depth))


def stack(elements: Sequence[TensorSeries], axis: int = 0) -> TensorSeries:
    """Stack equally shaped series along a new batch axis."""
    first = elements[0]
    for e in elements[1:]:
        _check_compatible(first, e)
    levels = [np.stack([e.levels[m] for e in elements], axis=axis) for m in range(first.depth + 1)]
    return type(first)(first.dim, first.depth, levels)


def random_lie(rng: np.random.Generator, dim: int, depth: int, scale: float = 1.0, batch: tuple = ()) -> LieElement:
    """Random Lie element whose coordinates are bounded by ``scale``.

    Each level is a random combination of iterated brackets of basis vectors
    (so the exponential is group-like), rescaled so that its largest
    coordinate is uniform in ``[0, scale]``.
    """
    basis = [LieElement.from_vector(np.eye(dim)[i], depth) for i in range(dim)]
    levels = [np.zeros(batch + (1,))]
    frontier = list(basis)
    for m in range(1, depth + 1):
        if m > 1:
            frontier = [truncated_mul(u, e) - truncated_mul(e, u) for u in frontier for e in basis]
        span = np.stack([w.levels[m] for w in frontier])  # (n_words, d^m)
        c = rng.uniform(-1.0, 1.0, size=batch + (len(frontier),))
        lv = c @ span
        peak = np.max(np.abs(lv), axis=-1, keepdims=True)
        peak[peak == 0] = 1.0
        lv = lv / peak * rng.uniform(0.0, scale, size=batch + (1,))
        levels.append(lv)
    return LieElement(dim, depth, levels)

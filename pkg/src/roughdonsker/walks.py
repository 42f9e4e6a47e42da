"""IID increment laws, seeded streams and rescaled (group-valued) random walks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .lift import LINEAR_LIFT, LOG_LINEAR, LiftedPath, lift_chord_products
from .tensor import GroupElement, LieElement, TensorSeries, dilate, exp, exp_vector, log, truncated_mul

KINDS = ("rademacher", "gaussian", "uniform", "student-t", "two-point-asymmetric", "degenerate")


def master_seed_split(seed: int, replica: int, cell: tuple = ()) -> np.random.Generator:
    """Independent generator for one replica of a seeded experiment.

    Streams are keyed by ``(seed, *cell, replica)`` through
    :class:`numpy.random.SeedSequence` spawn keys, so they do not depend on how
    replicas are scheduled.  ``cell`` separates the streams of different
    experiment cells (or of an oracle) that share a seed.
    """
    if seed < 0 or replica < 0 or any(c < 0 for c in cell):
        raise ValueError("seed, cell and replica indices must be non-negative")
    key = tuple(int(c) for c in cell) + (int(replica),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class IncrementDistribution:
    """Law of the walk increments; components are IID across the ``dim`` axes.

    With ``normalize`` (the default) each component is scaled to unit
    variance.  ``offset`` is added afterwards; a non-zero offset takes the walk
    outside the centred setting and is reported as such.
    """

    kind: str = "rademacher"
    dim: int = 1
    normalize: bool = True
    offset: float = 0.0
    nu: float = 5.0
    prob: float = 0.2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown increment law {self.kind!r}; choose from {KINDS}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "student-t" and self.nu <= 2:
            raise ValueError(f"student-t needs nu > 2 for finite variance, got {self.nu}")
        if self.kind == "two-point-asymmetric" and not 0 < self.prob < 1:
            raise ValueError("two-point probability must lie in (0, 1)")

    # law properties -----------------------------------------------------

    def raw_variance(self) -> float:
        return {
            "rademacher": 1.0,
            "gaussian": 1.0,
            "uniform": 1.0 / 3.0,
            "student-t": self.nu / (self.nu - 2.0),
            "two-point-asymmetric": self.prob / (1.0 - self.prob),
            "degenerate": 0.0,
        }[self.kind]

    @property
    def scale(self) -> float:
        var = self.raw_variance()
        if self.normalize and var > 0:
            return 1.0 / math.sqrt(var)
        return 1.0

    def covariance(self) -> np.ndarray:
        var = self.raw_variance() * self.scale**2
        return var * np.eye(self.dim)

    @property
    def centered(self) -> bool:
        return self.offset == 0.0

    @property
    def symmetric(self) -> bool:
        if not self.centered:
            return False
        return self.kind != "two-point-asymmetric" or self.prob == 0.5

    @property
    def moment_bound(self) -> float:
        """Supremum of the orders ``r`` with ``E|xi|^r < inf``."""
        return self.nu if self.kind == "student-t" else math.inf

    def has_moment(self, order: float) -> bool:
        return order < self.moment_bound

    @property
    def finite_support(self) -> bool:
        return self.kind in ("rademacher", "two-point-asymmetric", "degenerate")

    # sampling -------------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` increments, shape ``(n, dim)``."""
        shape = (n, self.dim)
        if self.kind == "rademacher":
            raw = 2.0 * rng.integers(0, 2, size=shape) - 1.0
        elif self.kind == "gaussian":
            raw = rng.standard_normal(shape)
        elif self.kind == "uniform":
            raw = rng.uniform(-1.0, 1.0, size=shape)
        elif self.kind == "student-t":
            raw = rng.standard_t(self.nu, size=shape)
        elif self.kind == "two-point-asymmetric":
            q = self.prob
            raw = np.where(rng.random(shape) < q, 1.0, -q / (1.0 - q))
        else:
            raw = np.zeros(shape)
        return raw * self.scale + self.offset

    def exact_support(self) -> list[tuple[Fraction, tuple]]:
        """Atoms ``(probability, point)`` with rational coordinates.

        Only available when the (possibly normalised) atoms are rational.
        """
        if self.kind == "degenerate":
            atoms = [(Fraction(1), Fraction(0))]
        elif self.kind == "rademacher":
            atoms = [(Fraction(1, 2), Fraction(1)), (Fraction(1, 2), Fraction(-1))]
        elif self.kind == "two-point-asymmetric":
            q = Fraction(self.prob).limit_denominator(10**6)
            atoms = [(q, Fraction(1)), (1 - q, -q / (1 - q))]
            if self.normalize:
                var = q / (1 - q)
                root = _rational_sqrt(var)
                if root is None:
                    raise ValueError("normalised two-point atoms are irrational; use normalize=False")
                atoms = [(p, x / root) for p, x in atoms]
        else:
            raise ValueError(f"{self.kind} increments do not have finite support")
        off = Fraction(self.offset).limit_denominator(10**9)
        points = []
        for combo in itertools.product(atoms, repeat=self.dim):
            prob = math.prod((p for p, _ in combo), start=Fraction(1))
            points.append((prob, tuple(x + off for _, x in combo)))
        return points


def _rational_sqrt(x: Fraction):
    num, den = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if num * num == x.numerator and den * den == x.denominator:
        return Fraction(num, den)
    return None


@dataclass(frozen=True)
class WalkSpec:
    n: int
    distribution: IncrementDistribution = field(default_factory=IncrementDistribution)
    depth: int = 2
    seed: int = 0
    interpolation: str = LINEAR_LIFT

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a walk needs n >= 1 steps")
        if self.depth < 1:
            raise ValueError("depth must be positive")


def walk_from_increments(increments, depth: int) -> LiftedPath:
    """Rescaled lifted walk on the grid ``{k/n}`` from raw increments ``(n, d)``.

    Point ``k`` is ``dilate(n^{-1/2}, exp(xi_1) (x) ... (x) exp(xi_k))``.
    """
    increments = np.asarray(increments, dtype=float)
    n = len(increments)
    products = lift_chord_products(increments, depth)
    points = dilate(1.0 / math.sqrt(n), products)
    return LiftedPath(np.arange(n + 1) / n, points, LINEAR_LIFT)


def sample_walk(spec: WalkSpec, rng: np.random.Generator) -> LiftedPath:
    """Lifted rescaled walk ``S_N(W^(n))`` sampled from ``rng``."""
    xi = spec.distribution.sample(rng, spec.n)
    return walk_from_increments(xi, spec.depth)


GroupSampler = Callable[[np.random.Generator, int], GroupElement]


def exponential_sampler(distribution: IncrementDistribution, depth: int) -> GroupSampler:
    """Group increments ``exp(xi)`` with ``xi`` drawn from ``distribution``."""

    def sampler(rng, n):
        return exp_vector(distribution.sample(rng, n), depth)

    return sampler


def area_sampler(distribution: IncrementDistribution, depth: int, area_scale: float = 1.0) -> GroupSampler:
    """Group increments ``exp(xi + eta [e_1, e_2])`` with independent signs ``eta``."""
    if distribution.dim < 2:
        raise ValueError("area increments need dimension >= 2")

    def sampler(rng, n):
        xi = distribution.sample(rng, n)
        eta = area_scale * (2.0 * rng.integers(0, 2, size=n) - 1.0)
        d = distribution.dim
        z = TensorSeries.zeros(d, depth, (n,))
        levels = list(z.levels)
        levels[1] = xi
        a2 = levels[2].reshape(n, d, d)
        a2[:, 0, 1] = eta
        a2[:, 1, 0] = -eta
        return exp(LieElement(d, depth, levels))

    return sampler


def sample_group_walk(n: int, sampler: GroupSampler, rng: np.random.Generator) -> LiftedPath:
    """Rescaled walk ``dilate(n^{-1/2}, xi_1 (x) ... (x) xi_k)`` of group increments.

    Segments are lifted chords when every increment is the exponential of a
    level-1 vector, and log-linear otherwise.
    """
    if n < 1:
        raise ValueError("a walk needs n >= 1 steps")
    xi = sampler(rng, n)
    if xi.batch_shape != (n,):
        raise ValueError(f"sampler returned batch {xi.batch_shape}, expected ({n},)")
    d, depth = xi.dim, xi.depth
    current = GroupElement.unit(d, depth)
    pts = [current.levels]
    for k in range(n):
        current = truncated_mul(current, xi[k])
        pts.append(current.levels)
    levels = [np.stack([p[m] for p in pts]) for m in range(depth + 1)]
    points = dilate(1.0 / math.sqrt(n), GroupElement(d, depth, levels))
    logs = log(xi)
    higher = max((float(np.max(np.abs(lv))) for lv in logs.levels[2:]), default=0.0)
    scale = max(1.0, float(np.max(np.abs(logs.levels[1]))))
    mode = LINEAR_LIFT if higher <= 1e-12 * scale else LOG_LINEAR
    return LiftedPath(np.arange(n + 1) / n, points, mode)


def replica_increments(distribution: IncrementDistribution, n: int, seed: int, replicas, cell: tuple = ()) -> np.ndarray:
    """Stack of per-replica increment draws, shape ``(len(replicas), n, d)``.

    Replica ``r`` always uses the stream ``master_seed_split(seed, r, cell)``.
    """
    out = np.empty((len(replicas), n, distribution.dim))
    for i, r in enumerate(replicas):
        out[i] = distribution.sample(master_seed_split(seed, r, cell), n)
    return out


def endpoint_products(increments: np.ndarray, depth: int) -> GroupElement:
    """Unrescaled products ``exp(xi_1) (x) ... (x) exp(xi_n)`` for a batch ``(R, n, d)``.

    Only the running product is kept, so memory stays ``O(R d^N)``.
    """
    R, n, d = increments.shape
    current = GroupElement.unit(d, depth, (R,))
    for k in range(n):
        current = truncated_mul(current, exp_vector(increments[:, k], depth))
    return current


def step2_log_path(increments: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log coordinates of the unrescaled step-2 lift along a batch of walks.

    Returns the level-1 path ``X`` with shape ``(..., n+1, d)`` and the
    antisymmetric level-2 log block ``A`` with shape ``(..., n+1, d, d)``.
    Uses ``log(exp(a) exp(v)) = a + v + [a, v]/2`` at step 2.
    """
    inc = np.asarray(increments, dtype=float)
    X = np.concatenate([np.zeros(inc.shape[:-2] + (1, inc.shape[-1])), np.cumsum(inc, axis=-2)], axis=-2)
    prev = X[..., :-1, :]
    wedge = 0.5 * (prev[..., :, None] * inc[..., None, :] - inc[..., :, None] * prev[..., None, :])
    A = np.concatenate([np.zeros(wedge.shape[:-3] + (1,) + wedge.shape[-2:]), np.cumsum(wedge, axis=-3)], axis=-3)
    return X, A


def step2_endpoint(increments: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint ``(X_n, A_n)`` of :func:`step2_log_path` without the intermediate path."""
    inc = np.asarray(increments, dtype=float)
    X = np.cumsum(inc, axis=-2)
    prev = X[..., :-1, :]
    nxt = inc[..., 1:, :]
    half = 0.5 * np.einsum("...ki,...kj->...ij", prev, nxt)
    return X[..., -1, :], half - np.swapaxes(half, -1, -2)

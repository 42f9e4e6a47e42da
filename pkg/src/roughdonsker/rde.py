"""Controlled differential equations driven by lifted paths.

The solver is the step-2 increment scheme

    y <- y + sum_i V_i(y) x1_i + sum_{i,j} (DV_j V_i)(y) x2_ij

where ``x1``/``x2`` are the level-1/level-2 signature blocks of the driver
increment over each step.  A Heun (midpoint-type) scheme on sampled Brownian
paths gives the Stratonovich reference, and ``path_integral`` evaluates
``int phi(x) dx`` along piecewise-linear paths by Gauss-Legendre quadrature.
"""

from __future__ import annotations

import csv
from typing import Callable

import numpy as np

from .lift import LINEAR_LIFT, LiftedPath, interpolate
from .tensor import GroupElement, LieElement, exp, inverse, log, truncated_mul


class DivergenceError(FloatingPointError):
    """The numerical state stopped being finite."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


def _fd_check(fn, deriv, points, in_dim, label, h=1e-5, rtol=1e-6):
    """Compare ``deriv`` with central differences of ``fn`` at ``points``.

    ``deriv`` returns the Jacobian with the input axis last.
    """
    jac = deriv(points)
    for b in range(in_dim):
        step = np.zeros(in_dim)
        step[b] = h
        fd = (fn(points + step) - fn(points - step)) / (2 * h)
        err = np.abs(fd - jac[..., b])
        scale = 1.0 + np.abs(jac[..., b])
        if np.any(err > rtol * scale):
            worst = float(np.max(err / scale))
            raise ValueError(f"{label}: derivative disagrees with finite differences (rel {worst:.2e})")


def _test_points(dim: int) -> np.ndarray:
    rng = np.random.default_rng(12345)
    return rng.uniform(-1.5, 1.5, size=(16, dim))


class VectorFieldSet:
    """``d`` vector fields on ``R^e`` with their Jacobians.

    ``values(y)`` maps ``(..., e)`` to ``(..., d, e)`` (row ``i`` is ``V_i(y)``)
    and ``derivatives(y)`` maps to ``(..., d, e, e)`` with
    ``[..., i, a, b] = dV_i^a / dy_b``.  Derivatives are checked against
    finite differences at construction unless ``validate=False``.
    """

    def __init__(self, dim: int, state_dim: int, values: Callable, derivatives: Callable,
                 name: str = "custom", validate: bool = True, commuting: bool | None = None):
        self.dim = dim
        self.state_dim = state_dim
        self._values = values
        self._derivatives = derivatives
        self.name = name
        self.commuting = commuting
        if validate:
            pts = _test_points(state_dim)
            v = self.values(pts)
            if v.shape != (len(pts), dim, state_dim):
                raise ValueError(f"values returned shape {v.shape}, expected (.., {dim}, {state_dim})")
            _fd_check(self.values, self.derivatives, pts, state_dim, name)

    def values(self, y):
        return self._values(np.asarray(y, dtype=float))

    def derivatives(self, y):
        return self._derivatives(np.asarray(y, dtype=float))

    def __repr__(self):
        return f"VectorFieldSet({self.name}, d={self.dim}, e={self.state_dim})"

    # built-ins ----------------------------------------------------------

    @classmethod
    def linear(cls, matrices, name="linear"):
        """``V_i(y) = A_i y``."""
        A = np.asarray(matrices, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError("linear fields need matrices of shape (d, e, e)")
        d, e, _ = A.shape
        commuting = all(np.allclose(A[i] @ A[j], A[j] @ A[i]) for i in range(d) for j in range(d))
        return cls(d, e,
                   lambda y: np.einsum("iab,...b->...ia", A, y),
                   lambda y: np.broadcast_to(A, y.shape[:-1] + A.shape),
                   name, commuting=commuting)

    @classmethod
    def constant(cls, vectors, name="constant"):
        c = np.asarray(vectors, dtype=float)
        d, e = c.shape
        return cls(d, e,
                   lambda y: np.broadcast_to(c, y.shape[:-1] + c.shape),
                   lambda y: np.zeros(y.shape[:-1] + (d, e, e)),
                   name, commuting=True)

    @classmethod
    def rotations(cls, planes=((0, 1), (1, 2)), state_dim: int = 3, speed: float = 1.0):
        """Rotation generators acting in coordinate planes of ``R^e``.

        Generators in planes that share one axis do not commute, e.g. the
        default pair in R^3 spans so(3) up to brackets.
        """
        mats = []
        for a, b in planes:
            M = np.zeros((state_dim, state_dim))
            M[a, b], M[b, a] = -speed, speed
            mats.append(M)
        fields = cls.linear(mats, name="rotations")
        fields.planes = tuple(tuple(p) for p in planes)
        return fields

    @classmethod
    def sigmoid(cls, weights, biases=None, name="sigmoid"):
        """``V_i(y) = tanh(W_i y + b_i)`` componentwise; bounded with bounded derivatives."""
        W = np.asarray(weights, dtype=float)
        d, e, _ = W.shape
        b = np.zeros((d, e)) if biases is None else np.asarray(biases, dtype=float)

        def values(y):
            return np.tanh(np.einsum("iab,...b->...ia", W, y) + b)

        def derivatives(y):
            s = 1.0 - values(y) ** 2
            return s[..., None] * W

        return cls(d, e, values, derivatives, name)

    def with_drift(self, drift: Callable, drift_derivative: Callable) -> "VectorFieldSet":
        """Append a drift field ``V_0`` as field ``d`` (paired with adjoined time)."""
        base = self

        def values(y):
            return np.concatenate([base.values(y), drift(y)[..., None, :]], axis=-2)

        def derivatives(y):
            return np.concatenate([base.derivatives(y), drift_derivative(y)[..., None, :, :]], axis=-3)

        return VectorFieldSet(self.dim + 1, self.state_dim, values, derivatives, self.name + "+drift")


class IntegrandSet:
    """``d`` functions ``phi_i: R^d -> R^e``; ``values(x)`` is ``(..., d, e)``.

    ``derivatives(x)`` is ``(..., d, e, d)``; checked like vector fields.
    """

    def __init__(self, dim: int, out_dim: int, values: Callable, derivatives: Callable,
                 name: str = "custom", validate: bool = True):
        self.dim = dim
        self.out_dim = out_dim
        self._values = values
        self._derivatives = derivatives
        self.name = name
        if validate:
            pts = _test_points(dim)
            v = self.values(pts)
            if v.shape != (len(pts), dim, out_dim):
                raise ValueError(f"integrand returned shape {v.shape}, expected (.., {dim}, {out_dim})")
            _fd_check(self.values, self.derivatives, pts, dim, name)

    def values(self, x):
        return self._values(np.asarray(x, dtype=float))

    def derivatives(self, x):
        return self._derivatives(np.asarray(x, dtype=float))

    @classmethod
    def identity(cls, dim: int = 1):
        """``phi_i(x) = x_i`` (scalar output), so the integral is ``|x|^2 / 2`` increments."""
        eye = np.eye(dim)
        return cls(dim, 1, lambda x: x[..., :, None],
                   lambda x: np.broadcast_to(eye[:, None, :], x.shape[:-1] + (dim, 1, dim)), "identity")

    @classmethod
    def constant(cls, c):
        c = np.asarray(c, dtype=float)
        d, e = c.shape
        return cls(d, e, lambda x: np.broadcast_to(c, x.shape[:-1] + c.shape),
                   lambda x: np.zeros(x.shape[:-1] + (d, e, d)), "constant")

    @classmethod
    def area(cls):
        """``phi(x) = (-x_2, x_1) / 2`` in the plane; integrates to the signed area."""
        J = np.zeros((2, 1, 2))
        J[0, 0, 1], J[1, 0, 0] = -0.5, 0.5

        def values(x):
            return np.stack([-0.5 * x[..., 1], 0.5 * x[..., 0]], axis=-1)[..., None]

        return cls(2, 1, values, lambda x: np.broadcast_to(J, x.shape[:-1] + J.shape), "area")


# step-2 scheme -------------------------------------------------------------


def step2_scheme(fields: VectorFieldSet, y0, x1, x2, check_every: int = 1):
    """Run the step-2 increment scheme over given increment blocks.

    ``x1`` has shape ``(..., K, d)`` and ``x2`` ``(..., K, d, d)`` (level-2
    signature blocks); ``y0`` broadcasts to ``(..., e)``.  Returns the states
    ``(..., K+1, e)``.  Vectorised over the leading batch axes.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    K, d = x1.shape[-2:]
    if d != fields.dim:
        raise ValueError(f"driver has dimension {d}, fields expect {fields.dim}")
    batch = x1.shape[:-2]
    y = np.broadcast_to(np.asarray(y0, dtype=float), batch + (fields.state_dim,)).copy()
    out = np.empty(batch + (K + 1, fields.state_dim))
    out[..., 0, :] = y
    for k in range(K):
        V = fields.values(y)
        DV = fields.derivatives(y)
        # (DV_j V_i)^a = sum_b DV_j[a, b] V_i[b]
        second = np.einsum("...jab,...ib->...ija", DV, V)
        y = y + np.einsum("...ia,...i->...a", V, x1[..., k, :]) + np.einsum("...ija,...ij->...a", second, x2[..., k, :, :])
        if (k + 1) % check_every == 0 or k == K - 1:
            if not np.all(np.isfinite(y)):
                raise DivergenceError(k)
        out[..., k + 1, :] = y
    return out


def _refined_times(times, substeps):
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    frac = np.arange(substeps) / substeps
    inner = times[:-1, None] + frac[None, :] * np.diff(times)[:, None]
    return np.append(inner.ravel(), times[-1])


def rde_solve_step2(driver: LiftedPath, fields: VectorFieldSet, y0, substeps: int = 1):
    """Solve ``dy = sum_i V_i(y) dx^i`` along a lifted path (depth >= 2).

    Each mesh interval is split into ``substeps`` pieces through
    :func:`interpolate`.  Returns ``(times, states)`` with states
    ``(len(times), e)``.
    """
    if driver.depth < 2:
        raise ValueError("RDE solving needs a driver of depth >= 2 (level-2 data)")
    times = _refined_times(driver.times, substeps)
    pts = interpolate(driver, times) if substeps > 1 else driver.points
    inc = truncated_mul(inverse(pts[:-1]), pts[1:])
    x1 = inc.levels[1]
    x2 = inc.level(2)
    return times, step2_scheme(fields, y0, x1, x2)


def walk_increment_blocks(increments, scale: float = 1.0):
    """Level-1/level-2 signature blocks of lifted chords ``exp(scale * v)``."""
    v = scale * np.asarray(increments, dtype=float)
    return v, 0.5 * v[..., :, None] * v[..., None, :]


def adjoin_time(path: LiftedPath) -> LiftedPath:
    """The lift of ``t -> (x_t, t)``, time becoming coordinate ``d`` (last).

    Each segment log is extended by the time step, so cross terms between
    time and the path follow the segment's own interpolation.
    """
    d, depth = path.dim, path.depth
    seg = log(path.segment_increments())
    K = len(path.times) - 1
    levels = [np.zeros((K, 1))]
    for m in range(1, depth + 1):
        big = np.zeros((K,) + (d + 1,) * m)
        big[(slice(None),) + (slice(0, d),) * m] = seg.level(m)
        levels.append(big.reshape(K, -1))
    levels[1][:, d] = np.diff(path.times)
    steps = exp(LieElement(d + 1, depth, levels))
    lv0 = path.points[0]
    start_levels = [np.zeros(1)]
    for m in range(1, depth + 1):
        big = np.zeros((d + 1,) * m)
        big[(slice(0, d),) * m] = lv0.level(m)
        start_levels.append(big.ravel())
    start_levels[0] = np.ones(1)
    start = GroupElement(d + 1, depth, start_levels)
    pts = [start]
    current = start
    for k in range(K):
        current = truncated_mul(current, steps[k])
        pts.append(current)
    levels = [np.stack([p.levels[m] for p in pts]) for m in range(depth + 1)]
    return LiftedPath(path.times, GroupElement(d + 1, depth, levels), "log-linear")


# Stratonovich reference ------------------------------------------------------


def stratonovich_reference(fields: VectorFieldSet, samples, y0):
    """Heun scheme for ``dY = V(Y) o dB`` along sampled paths ``(..., K+1, d)``.

    Returns states ``(..., K+1, e)``.
    """
    samples = np.asarray(samples, dtype=float)
    dB = np.diff(samples, axis=-2)
    K = dB.shape[-2]
    batch = dB.shape[:-2]
    y = np.broadcast_to(np.asarray(y0, dtype=float), batch + (fields.state_dim,)).copy()
    out = np.empty(batch + (K + 1, fields.state_dim))
    out[..., 0, :] = y
    for k in range(K):
        db = dB[..., k, :]
        f0 = np.einsum("...ia,...i->...a", fields.values(y), db)
        pred = y + f0
        f1 = np.einsum("...ia,...i->...a", fields.values(pred), db)
        y = y + 0.5 * (f0 + f1)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(k)
        out[..., k + 1, :] = y
    return out


def stratonovich_endpoint(fields: VectorFieldSet, increments, y0):
    """Heun endpoint from Brownian increments ``(R, K, d)`` without storing the path."""
    dB = np.asarray(increments, dtype=float)
    R, K, _ = dB.shape
    y = np.broadcast_to(np.asarray(y0, dtype=float), (R, fields.state_dim)).copy()
    for k in range(K):
        db = dB[:, k, :]
        f0 = np.einsum("ria,ri->ra", fields.values(y), db)
        f1 = np.einsum("ria,ri->ra", fields.values(y + f0), db)
        y += 0.5 * (f0 + f1)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(k)
    return y


# integrals along piecewise-linear paths ----------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)
_GL_THETA = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def integral_along_samples(phi: IntegrandSet, samples):
    """Cumulative ``int phi(x) dx`` along piecewise-linear paths ``(..., K+1, d)``.

    Five-point Gauss-Legendre per segment: exact for polynomial integrands of
    degree up to 9, and order-10 accurate for smooth ones.
    """
    x = np.asarray(samples, dtype=float)
    v = np.diff(x, axis=-2)
    base = x[..., :-1, :]
    pts = base[..., None, :] + _GL_THETA[:, None] * v[..., None, :]  # (..., K, q, d)
    vals = phi.values(pts)  # (..., K, q, d, e)
    seg = np.einsum("q,...kqde,...kd->...ke", _GL_W, vals, v)
    zero = np.zeros(seg.shape[:-2] + (1, seg.shape[-1]))
    return np.concatenate([zero, np.cumsum(seg, axis=-2)], axis=-2)


def path_integral(phi: IntegrandSet, path: LiftedPath):
    """``t_k -> int_0^{t_k} phi(x) dx`` along a linear-lift path; shape ``(K+1, e)``."""
    if path.interpolation != LINEAR_LIFT:
        raise ValueError("path_integral needs a linear-lift (piecewise-linear) path")
    if path.dim != phi.dim:
        raise ValueError("integrand and path dimensions differ")
    return integral_along_samples(phi, path.trajectory())


def write_solution_csv(filename, times, states) -> None:
    """Time/state table with columns ``time, y1, ..., ye``."""
    states = np.asarray(states)
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"y{i + 1}" for i in range(states.shape[-1])])
        for t, row in zip(times, states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

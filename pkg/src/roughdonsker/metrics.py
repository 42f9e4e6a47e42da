"""Homogeneous norms and alpha-Hoelder rough-path distances.

The norm used throughout is the sum form

    ||g|| = sum_m |pi_m(log g)|^(1/m)      (Euclidean norm per level)

which is homogeneous under dilations and equivalent to the Carnot-Caratheodory
norm: there are constants ``0 < c <= C`` depending only on ``(d, N)`` with
``c ||g||_CC <= ||g|| <= C ||g||_CC``.  Scaling exponents, which is what the
experiments measure, do not see these constants.  The sum form is not
subadditive, so only a quasi-triangle inequality holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .lift import LiftedPath, constant_unit_path, interpolate
from .tensor import TensorSeries, inverse, log, truncated_mul

MIN_GAP = 1e-12
DEFAULT_REFINEMENT = 4


ROUNDOFF = 1e-13


def homogeneous_norm(g: TensorSeries, scale=0.0):
    """Sum-form homogeneous norm; an array over the batch, or a float.

    A level-m block below ``ROUNDOFF * max(lower levels, scale)^m`` is
    treated as floating-point residue and dropped; otherwise the m-th root
    would blow roundoff of order 1e-16 up to order 1e-5.  ``scale`` is the
    size of the operands that produced ``g`` (see :func:`cc_distance`).
    """
    lg = log(g)
    total = 0.0
    for m in range(1, g.depth + 1):
        r = np.sqrt(np.sum(lg.levels[m] ** 2, axis=-1))
        if m > 1:
            ref = np.maximum(np.asarray(total), scale)
            r = np.where(r <= ROUNDOFF * ref**m, 0.0, r)
        total = total + r ** (1.0 / m)
    return float(total) if np.ndim(total) == 0 else total


def cc_distance(g: TensorSeries, h: TensorSeries):
    """Left-invariant distance ``||g^{-1} (x) h||``."""
    scale = np.maximum(homogeneous_norm(g), homogeneous_norm(h))
    return homogeneous_norm(truncated_mul(inverse(g), h), scale)


@dataclass(frozen=True)
class HolderEvaluation:
    alpha: float
    refinement: int
    value: float
    pair: tuple[float, float] | None

    def as_dict(self):
        return {"alpha": self.alpha, "refinement": self.refinement, "value": self.value,
                "pair": None if self.pair is None else list(self.pair)}


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def refined_grid(times: np.ndarray, refinement: int) -> np.ndarray:
    """Grid with ``2**refinement - 1`` dyadic points added inside each segment."""
    if refinement < 0:
        raise ValueError("refinement depth must be non-negative")
    if refinement == 0:
        return np.asarray(times, dtype=float)
    frac = np.arange(2**refinement) / 2**refinement
    t = np.asarray(times, dtype=float)
    inner = t[:-1, None] + frac[None, :] * np.diff(t)[:, None]
    return np.append(inner.ravel(), t[-1])


@numba.njit(cache=True, nogil=True)
def _scan_step2(times, X, A, Xp, Ap, alphas, uniform, min_gap, roundoff2):
    """Max over pairs i < j of d(x_ij, x'_ij) / (t_j - t_i)^alpha, for every alpha.

    ``X`` (K, d) and ``A`` (K, d, d) are log coordinates of the grid points.
    Returns (values, best_i, best_j).  Pairs whose distance provably cannot
    beat the running maxima are skipped before any root is taken.  Level-2
    residue below ``ROUNDOFF * |level 1|^2`` is dropped as in
    :func:`homogeneous_norm`.
    """
    K, d = X.shape
    na = alphas.shape[0]
    best = np.zeros(na)
    bi = -np.ones(na, dtype=np.int64)
    bj = -np.ones(na, dtype=np.int64)
    lagpow = np.ones((na, K))
    if uniform:
        h = times[1] - times[0]
        for a in range(na):
            for lag in range(1, K):
                lagpow[a, lag] = (lag * h) ** alphas[a]
    denom = np.empty(na)
    u1 = np.empty(d)
    w1 = np.empty(d)
    for i in range(K - 1):
        for j in range(i + 1, K):
            dt = times[j] - times[i]
            if dt < min_gap:
                continue
            thr = np.inf
            for a in range(na):
                denom[a] = lagpow[a, j - i] if uniform else dt ** alphas[a]
                v = best[a] * denom[a]
                if v < thr:
                    thr = v
            n1 = 0.0
            for k in range(d):
                u1[k] = X[j, k] - X[i, k]
                w1[k] = Xp[j, k] - Xp[i, k]
                diff = w1[k] - u1[k]
                n1 += diff * diff
            n2 = 0.0
            for k in range(d):
                for l in range(d):
                    u2 = A[j, k, l] - A[i, k, l] - 0.5 * (X[i, k] * X[j, l] - X[j, k] * X[i, l])
                    w2 = Ap[j, k, l] - Ap[i, k, l] - 0.5 * (Xp[i, k] * Xp[j, l] - Xp[j, k] * Xp[i, l])
                    z = w2 - u2 - 0.5 * (u1[k] * w1[l] - w1[k] * u1[l])
                    n2 += z * z
            if n2 <= roundoff2 * n1 * n1:
                n2 = 0.0
            half = 0.5 * thr
            if n1 <= half * half and n2 <= half * half * half * half:
                continue
            dist = math.sqrt(n1) + math.sqrt(math.sqrt(n2))
            for a in range(na):
                r = dist / denom[a]
                if r > best[a]:
                    best[a] = r
                    bi[a] = i
                    bj[a] = j
    return best, bi, bj


@numba.njit(cache=True, nogil=True)
def _scan_step2_norm(X, A, lagpow, roundoff2):
    """Norm-only variant of ``_scan_step2`` on a uniform grid.

    Requires antisymmetric level-2 log blocks (true for group-like points).
    ``lagpow[a, L]`` is ``(L h)^alpha_a``.  Returns (values, best_i, best_j).
    """
    K, d = X.shape
    na = lagpow.shape[0]
    best = np.zeros(na)
    bi = -np.ones(na, dtype=np.int64)
    bj = -np.ones(na, dtype=np.int64)
    for i in range(K - 1):
        for j in range(i + 1, K):
            L = j - i
            thr = best[0] * lagpow[0, L]
            for a in range(1, na):
                v = best[a] * lagpow[a, L]
                if v < thr:
                    thr = v
            n1 = 0.0
            for k in range(d):
                z = X[j, k] - X[i, k]
                n1 += z * z
            n2 = 0.0
            for k in range(d):
                for l in range(k + 1, d):
                    z = A[j, k, l] - A[i, k, l] - 0.5 * (X[i, k] * X[j, l] - X[j, k] * X[i, l])
                    n2 += z * z
            n2 *= 2.0
            if n2 <= roundoff2 * n1 * n1:
                n2 = 0.0
            half = 0.5 * thr
            if n1 <= half * half and n2 <= half * half * half * half:
                continue
            dist = math.sqrt(n1) + math.sqrt(math.sqrt(n2))
            for a in range(na):
                r = dist / lagpow[a, L]
                if r > best[a]:
                    best[a] = r
                    bi[a] = i
                    bj[a] = j
    return best, bi, bj


def _is_uniform(times: np.ndarray) -> bool:
    dt = np.diff(times)
    return bool(np.all(np.abs(dt - dt[0]) <= 1e-12 * dt[0]))


def holder_scan_logs(times, X, A, alphas, Xp=None, Ap=None):
    """Hoelder sup over all grid pairs from step-2 log coordinates.

    ``X`` (K, d), ``A`` (K, d, d); the second path defaults to the unit path.
    Returns ``(values, pairs)`` with one entry per alpha.
    """
    times = np.ascontiguousarray(times, dtype=float)
    X = np.ascontiguousarray(X, dtype=float)
    A = np.ascontiguousarray(A, dtype=float)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    uniform = _is_uniform(times)
    antisym = np.allclose(A, -np.swapaxes(A, -1, -2), rtol=0.0, atol=1e-14 * max(1.0, float(np.max(np.abs(A), initial=0.0))))
    if Xp is None and Ap is None and uniform and antisym and times[1] - times[0] >= MIN_GAP:
        lag = np.arange(len(times)) * (times[1] - times[0])
        lagpow = lag[None, :] ** alphas[:, None]
        lagpow[:, 0] = 1.0
        vals, bi, bj = _scan_step2_norm(X, A, lagpow, ROUNDOFF**2)
    else:
        Xp = np.zeros_like(X) if Xp is None else np.ascontiguousarray(Xp, dtype=float)
        Ap = np.zeros_like(A) if Ap is None else np.ascontiguousarray(Ap, dtype=float)
        vals, bi, bj = _scan_step2(times, X, A, Xp, Ap, alphas, uniform, MIN_GAP, ROUNDOFF**2)
    pairs = [None if i < 0 else (float(times[i]), float(times[j])) for i, j in zip(bi, bj)]
    return vals, pairs


def _scan_general(times, pts, pts_p, alphas):
    K = len(times)
    best = np.zeros(len(alphas))
    pairs = [None] * len(alphas)
    inv, inv_p = inverse(pts), inverse(pts_p)
    for i in range(K - 1):
        dt = times[i + 1:] - times[i]
        inc = truncated_mul(inv[i], pts[i + 1:])
        inc_p = truncated_mul(inv_p[i], pts_p[i + 1:])
        dist = cc_distance(inc, inc_p)
        ok = dt >= MIN_GAP
        for a, alpha in enumerate(alphas):
            r = np.where(ok, dist / np.where(ok, dt, 1.0) ** alpha, 0.0)
            j = int(np.argmax(r))
            if r[j] > best[a]:
                best[a] = r[j]
                pairs[a] = (float(times[i]), float(times[i + 1 + j]))
    return best, pairs


def holder_distance(x: LiftedPath, xp: LiftedPath, alpha: float, refinement: int = DEFAULT_REFINEMENT) -> HolderEvaluation:
    """``sup_{s<t} d(x_{s,t}, x'_{s,t}) / (t-s)^alpha`` over a finite set of times.

    The candidate times are the union of both grids with ``refinement`` dyadic
    levels inserted in every segment, so the value is a lower bound of the
    true supremum that increases with ``refinement``.
    """
    _check_alpha(alpha)
    return holder_distances(x, xp, [alpha], refinement)[0]


def holder_distances(x: LiftedPath, xp: LiftedPath, alphas, refinement: int = DEFAULT_REFINEMENT) -> list[HolderEvaluation]:
    """:func:`holder_distance` for several exponents with one pair scan."""
    for a in alphas:
        _check_alpha(a)
    if (x.dim, x.depth) != (xp.dim, xp.depth):
        raise ValueError("paths live in different groups")
    grid = np.union1d(x.times, xp.times)
    lo, hi = max(x.times[0], xp.times[0]), min(x.times[-1], xp.times[-1])
    grid = grid[(grid >= lo) & (grid <= hi)]
    times = refined_grid(grid, refinement)
    pts, pts_p = interpolate(x, times), interpolate(xp, times)
    alphas = np.asarray(alphas, dtype=float)
    if x.depth == 2:
        lg, lgp = log(pts), log(pts_p)
        vals, pairs = holder_scan_logs(times, lg.levels[1], lg.level(2), alphas, lgp.levels[1], lgp.level(2))
    else:
        vals, pairs = _scan_general(times, pts, pts_p, alphas)
    return [HolderEvaluation(float(a), refinement, float(v), p) for a, v, p in zip(alphas, vals, pairs)]


def holder_norm(x: LiftedPath, alpha: float, refinement: int = DEFAULT_REFINEMENT) -> HolderEvaluation:
    """Hoelder distance to the constant unit path."""
    return holder_distance(x, constant_unit_path(x.dim, x.depth, x.times[[0, -1]]), alpha, refinement)

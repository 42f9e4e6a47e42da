"""Group-valued paths: Chen lifts of sampled paths and their interpolation."""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np

from .tensor import (
    GroupElement,
    LieElement,
    TensorSeries,
    exp,
    exp_vector,
    inverse,
    log,
    truncated_mul,
)

LINEAR_LIFT = "linear-lift"
LOG_LINEAR = "log-linear"
INTERPOLATIONS = (LINEAR_LIFT, LOG_LINEAR)

_TIME_EPS = 1e-12


class LiftedPath:
    """Group-valued path on a time grid, interpolated between grid points.

    ``points`` is a :class:`GroupElement` with batch shape ``(K+1,)`` holding
    ``x_{t_0}, ..., x_{t_K}``.  ``interpolation`` is ``"linear-lift"`` (segments
    are one-parameter subgroups ``exp(theta * v)``, i.e. lifted chords) or
    ``"log-linear"`` (segments follow ``exp(theta * log(increment))``).
    """

    def __init__(self, times, points: GroupElement, interpolation: str = LINEAR_LIFT, logs: LieElement | None = None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("a lifted path needs at least two grid points")
        if np.any(np.diff(times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if points.batch_shape != (len(times),):
            raise ValueError(f"expected {len(times)} points, got batch {points.batch_shape}")
        if interpolation not in INTERPOLATIONS:
            raise ValueError(f"unknown interpolation {interpolation!r}")
        self.times = times
        self.points = points.astype(GroupElement)
        self.interpolation = interpolation
        self._logs = logs

    @property
    def dim(self) -> int:
        return self.points.dim

    @property
    def depth(self) -> int:
        return self.points.depth

    @property
    def logs(self) -> LieElement:
        """Log-chart coordinates of every grid point (cached)."""
        if self._logs is None:
            self._logs = log(self.points)
        return self._logs

    def __len__(self):
        return len(self.times)

    def trajectory(self) -> np.ndarray:
        """Level-1 path ``(K+1, d)``: the underlying R^d trajectory."""
        return self.points.levels[1].copy()

    def segment_increments(self) -> GroupElement:
        """``x_{t_k}^{-1} (x) x_{t_{k+1}}`` for every segment, batch ``(K,)``."""
        return truncated_mul(inverse(self.points[:-1]), self.points[1:])

    def chords(self) -> np.ndarray:
        """Level-1 segment vectors ``v_k`` with shape ``(K, d)``."""
        return np.diff(self.points.levels[1], axis=0)

    def __repr__(self):
        return (f"LiftedPath(d={self.dim}, N={self.depth}, K={len(self.times) - 1}, "
                f"t=[{self.times[0]:g}, {self.times[-1]:g}], {self.interpolation})")


def _uniform_grid(k: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, k + 1)


def lift_chord_products(chords: np.ndarray, depth: int) -> GroupElement:
    """Running products ``exp(v_1) (x) ... (x) exp(v_k)``, k = 0..K.

    ``chords`` has shape ``(*batch, K, d)``; the result has batch
    ``(*batch, K+1)``.  Sequential in K, vectorised over the leading batch.
    """
    chords = np.asarray(chords, dtype=float)
    *batch, K, d = chords.shape
    batch = tuple(batch)
    steps = exp_vector(chords, depth)
    current = GroupElement.unit(d, depth, batch)
    out = [[lv] for lv in current.levels]
    for k in range(K):
        step = GroupElement(d, depth, [lv[..., k, :] for lv in steps.levels])
        current = truncated_mul(current, step)
        for m, lv in enumerate(current.levels):
            out[m].append(lv)
    levels = [np.stack(lvs, axis=len(batch)) for lvs in out]
    return GroupElement(d, depth, levels)


def lift_linear_chords(samples, depth: int, times=None) -> LiftedPath:
    """Chen lift of the piecewise-linear path through ``samples``.

    Grid point ``k`` carries ``exp(v_1) (x) ... (x) exp(v_k)`` with
    ``v_j = samples[j] - samples[j-1]``; the grid is uniform on [0, 1] unless
    ``times`` is given.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or len(samples) < 2:
        raise ValueError("need at least two samples of shape (K+1, d)")
    chords = np.diff(samples, axis=0)
    times = _uniform_grid(len(chords)) if times is None else np.asarray(times, dtype=float)
    return LiftedPath(times, lift_chord_products(chords, depth), LINEAR_LIFT)


def relift(path: LiftedPath, depth: int) -> LiftedPath:
    """Lift a piecewise-linear-lift path to another depth by re-lifting its chords."""
    if path.interpolation != LINEAR_LIFT:
        raise ValueError("only linear-lift paths can be re-lifted")
    return LiftedPath(path.times, lift_chord_products(path.chords(), depth), LINEAR_LIFT)


def _check_time(path: LiftedPath, t: np.ndarray):
    lo, hi = path.times[0], path.times[-1]
    if np.any(t < lo - _TIME_EPS) or np.any(t > hi + _TIME_EPS):
        raise ValueError(f"time outside grid range [{lo}, {hi}]")


def interpolate(path: LiftedPath, t) -> GroupElement:
    """Value of the path at time(s) ``t``.

    Between grid points: ``x_{t_k} (x) exp(theta * v)`` for linear-lift paths
    (``v`` the chord), ``x_{t_k} (x) exp(theta * log(x_{t_k, t_{k+1}}))``
    otherwise, with ``theta = (t - t_k) / (t_{k+1} - t_k)``.  Grid times return
    the stored point exactly.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_time(path, t)
    times = path.times
    k = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
    theta = np.clip((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0)
    base = path.points[k]
    if path.interpolation == LINEAR_LIFT:
        step = LieElement.from_vector(theta[:, None] * path.chords()[k], path.depth)
    else:
        seg = log(truncated_mul(inverse(path.points[k]), path.points[k + 1]))
        step = LieElement(seg.dim, seg.depth, [lv * theta[:, None] for lv in seg.levels])
    out = truncated_mul(base, exp(step))
    # grid times return the stored points exactly
    nxt = path.points[k + 1]
    levels = [np.where((theta == 0.0)[:, None], b, np.where((theta == 1.0)[:, None], e, o))
              for b, e, o in zip(base.levels, nxt.levels, out.levels)]
    out = GroupElement(out.dim, out.depth, levels)
    return out[0] if scalar else out


def increment(path: LiftedPath, s, t) -> GroupElement:
    """``x_s^{-1} (x) x_t``; vectorised over array-valued ``s`` and ``t``."""
    if np.any(np.asarray(s) > np.asarray(t)):
        raise ValueError("increment requires s <= t")
    return truncated_mul(inverse(interpolate(path, s)), interpolate(path, t))


def signature(path: LiftedPath) -> GroupElement:
    """Endpoint of the lift, ``x_{t_0, t_K}``."""
    return truncated_mul(inverse(path.points[0]), path.points[-1])


def concatenate_samples(first, second) -> np.ndarray:
    """Join two sample sequences so that the second starts where the first ends."""
    first = np.atleast_2d(np.asarray(first, dtype=float))
    second = np.atleast_2d(np.asarray(second, dtype=float))
    return np.vstack([first, second[1:] - second[0] + first[-1]])


# text serialisation -------------------------------------------------------

_FORMAT = "%.17g"


def _coordinate_labels(d: int, depth: int) -> list[str]:
    labels = []
    for m in range(1, depth + 1):
        for flat in range(d**m):
            word = np.unravel_index(flat, (d,) * m) if m else ()
            labels.append(f"a{m}_" + "".join(str(i + 1) for i in word))
    return labels


def dumps(path: LiftedPath) -> str:
    """Columnar text: header lines, then ``time`` and log coordinates by level."""
    logs = path.logs
    coords = np.concatenate(logs.levels[1:], axis=-1)
    buf = io.StringIO()
    buf.write(f"# dim {path.dim}\n# depth {path.depth}\n# interpolation {path.interpolation}\n")
    buf.write(" ".join(["time"] + _coordinate_labels(path.dim, path.depth)) + "\n")
    for t, row in zip(path.times, coords):
        buf.write(" ".join(_FORMAT % v for v in (t, *row)) + "\n")
    return buf.getvalue()


def loads(text: str) -> LiftedPath:
    header = {}
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(" ")
            header[key] = value.strip()
        elif line.startswith("time"):
            continue
        else:
            rows.append([float(v) for v in line.split()])
    try:
        d, depth, interp = int(header["dim"]), int(header["depth"]), header["interpolation"]
    except KeyError as exc:
        raise ValueError(f"missing header field {exc}") from None
    data = np.array(rows, dtype=float)
    width = 1 + sum(d**m for m in range(1, depth + 1))
    if data.ndim != 2 or data.shape[1] != width:
        raise ValueError(f"expected {width} columns per row")
    levels = [np.zeros((len(data), 1))]
    col = 1
    for m in range(1, depth + 1):
        levels.append(data[:, col:col + d**m])
        col += d**m
    logs = LieElement(d, depth, levels)
    return LiftedPath(data[:, 0], exp(logs), interp, logs=logs)


def save(path: LiftedPath, filename) -> None:
    with open(filename, "w") as fh:
        fh.write(dumps(path))


def load(filename) -> LiftedPath:
    with open(filename) as fh:
        return loads(fh.read())


def constant_unit_path(dim: int, depth: int, times=None) -> LiftedPath:
    times = np.array([0.0, 1.0]) if times is None else np.asarray(times, dtype=float)
    return LiftedPath(times, GroupElement.unit(dim, depth, (len(times),)), LINEAR_LIFT)


def path_from_points(times, points: Sequence[GroupElement] | GroupElement, interpolation: str = LOG_LINEAR) -> LiftedPath:
    if not isinstance(points, TensorSeries):
        from .tensor import stack
        points = stack(list(points))
    return LiftedPath(times, points.astype(GroupElement), interpolation)

"""Cadlag paths with finite descriptions and the Skorokhod machinery on them.

A :class:`CadlagPath` is stored as breakpoints ``0 = t_0 < ... < t_m = T``
with a left limit and a value at each breakpoint.  Between breakpoints the
path is affine from ``right[i]`` to ``left[i + 1]``, so step paths are the
special case ``left[i + 1] == right[i]``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AccuracyError, ParameterError

STEP = "step"
LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class CadlagPath:
    times: np.ndarray
    left: np.ndarray
    right: np.ndarray
    kind: str = STEP

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        lv = np.asarray(self.left, dtype=float)
        rv = np.asarray(self.right, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ParameterError("a path needs at least the breakpoints 0 and T")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ParameterError("breakpoints must start at 0 and increase strictly")
        if lv.shape != t.shape or rv.shape != t.shape:
            raise ParameterError("left/right value arrays must match breakpoints")
        if not (np.all(np.isfinite(lv)) and np.all(np.isfinite(rv))):
            raise ParameterError("path values must be finite")
        if lv[0] != rv[0]:
            raise ParameterError("no jump allowed at time 0")
        if self.kind == STEP and np.any(lv[1:] != rv[:-1]):
            raise ParameterError("step path must be constant between breakpoints")
        if self.kind not in (STEP, LINEAR):
            raise ParameterError(f"unknown path kind {self.kind!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "left", lv)
        object.__setattr__(self, "right", rv)

    # -- constructors --------------------------------------------------
    @classmethod
    def step(cls, jump_times, values, horizon):
        """Step path equal to ``values[k]`` on ``[jump_times[k-1], jump_times[k])``."""
        jt = np.asarray(jump_times, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vals.shape != (jt.size + 1,):
            raise ParameterError("need one more value than jump times")
        if jt.size and (jt[0] <= 0.0 or jt[-1] > horizon):
            raise ParameterError("jump times must lie in (0, T]")
        if jt.size and jt[-1] == horizon:
            times = np.concatenate(([0.0], jt))
            left = np.concatenate(([vals[0]], vals[:-1]))
            right = vals.copy()
        else:
            times = np.concatenate(([0.0], jt, [float(horizon)]))
            left = np.concatenate(([vals[0]], vals[:-1], [vals[-1]]))
            right = np.concatenate((vals, [vals[-1]]))
        return cls(times, left, right, STEP)

    @classmethod
    def from_grid(cls, values, horizon):
        """Step path taking ``values[k]`` on ``[k h, (k+1) h)`` with ``h = T / len(values)``."""
        vals = np.asarray(values, dtype=float)
        n = vals.size
        grid = np.arange(1, n) * (horizon / n)
        return cls.step(grid, vals, horizon)

    @classmethod
    def linear(cls, node_times, node_values):
        """Continuous piecewise-linear interpolation through the nodes."""
        t = np.asarray(node_times, dtype=float)
        x = np.asarray(node_values, dtype=float)
        return cls(t, x.copy(), x.copy(), LINEAR)

    # -- basic queries -------------------------------------------------
    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def n_breaks(self):
        return self.times.size

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise ParameterError("evaluation time outside [0, T]")
        i = np.searchsorted(self.times, t, side="right") - 1
        i = np.minimum(i, self.times.size - 1)
        at = self.times[i] == t
        nxt = np.minimum(i + 1, self.times.size - 1)
        span = self.times[nxt] - self.times[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(span > 0, (t - self.times[i]) / np.where(span > 0, span, 1.0), 0.0)
        val = self.right[i] + frac * (self.left[nxt] - self.right[i])
        out = np.where(at, self.right[i], val)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.times, t, side="left")
        at = (i < self.times.size) & (self.times[np.minimum(i, self.times.size - 1)] == t)
        out = np.where(at, self.left[np.minimum(i, self.times.size - 1)], self(np.where(at, 0.0, t)))
        return float(out) if out.ndim == 0 else out

    def jumps(self):
        """Times and sizes of the discontinuities."""
        d = self.right - self.left
        mask = d != 0
        return self.times[mask], d[mask]

    def is_nondecreasing(self):
        seg = self.left[1:] - self.right[:-1]
        return bool(np.all(seg >= 0) and np.all(self.right >= self.left))

    def step_pieces(self):
        """``(starts, values)`` of the constant pieces of a step path on ``[0, T)``."""
        if self.kind != STEP:
            raise ParameterError("step pieces requested for a non-step path")
        starts = self.times[:-1]
        values = self.right[:-1]
        keep = np.concatenate(([True], values[1:] != values[:-1]))
        return starts[keep], values[keep]

    def graph_vertices(self):
        """Vertices of the completed graph, jumps as vertical segments."""
        pts = np.empty((2 * self.times.size, 2))
        pts[0::2, 0] = self.times
        pts[1::2, 0] = self.times
        pts[0::2, 1] = self.left
        pts[1::2, 1] = self.right
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        # drop interior vertices lying on a straight continuation
        if len(pts) > 2:
            d1 = pts[1:-1] - pts[:-2]
            d2 = pts[2:] - pts[1:-1]
            cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            same_dir = (d1[:, 0] * d2[:, 0] + d1[:, 1] * d2[:, 1]) > 0
            collinear = (cross == 0) & same_dir
            keep = np.concatenate(([True], ~collinear, [True]))
            pts = pts[keep]
        return pts

    # -- export ----------------------------------------------------------
    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# kind={self.kind} T={self.horizon!r}\n")
        buf.write("t,left,right\n")
        for t, lv, rv in zip(self.times, self.left, self.right):
            buf.write(f"{float(t)!r},{float(lv)!r},{float(rv)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text_or_path):
        text = text_or_path
        if "\n" not in text_or_path:
            with open(text_or_path) as fh:
                text = fh.read()
        lines = text.strip().splitlines()
        kind = STEP
        if lines[0].startswith("#"):
            for tok in lines[0][1:].split():
                if tok.startswith("kind="):
                    kind = tok.split("=", 1)[1]
            lines = lines[1:]
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], kind)


def _check_common_horizon(x, y):
    if not math.isclose(x.horizon, y.horizon, rel_tol=0, abs_tol=1e-12):
        raise ParameterError("paths must share the same horizon")


# ---------------------------------------------------------------------------
# M1


def _band(P, Q, d):
    pstart = np.minimum(P[:-1, 0], P[1:, 0])
    pend = np.maximum(P[:-1, 0], P[1:, 0])
    qstart = Q[:-1, 0]
    qend = Q[1:, 0]
    jlo = np.searchsorted(qend, pstart - d, side="left")
    jhi = np.searchsorted(qstart, pend + d, side="right") - 1
    jlo = np.minimum(jlo, len(qstart) - 1)
    jhi = np.maximum(jhi, jlo)
    return jlo.astype(np.int64), jhi.astype(np.int64)


def m1_decide(x: CadlagPath, y: CadlagPath, d: float) -> bool:
    """Exact test of ``d_M1(x, y) <= d``."""
    P = x.graph_vertices()
    Q = y.graph_vertices()
    return _decide_graphs(P, Q, d)


def _decide_graphs(P, Q, d):
    if len(P) == 1:
        P = np.vstack([P, P])
    if len(Q) == 1:
        Q = np.vstack([Q, Q])
    jlo, jhi = _band(P, Q, d)
    return bool(kernels.frechet_decide(P, Q, float(d), jlo, jhi))


def m1_distance(x: CadlagPath, y: CadlagPath, epsilon: float = 1e-6, max_iter: int = 200) -> float:
    """M1 distance within ``epsilon``: an upper bound no more than ``epsilon`` above it.

    The distance is the sup-norm Frechet distance between the completed
    graphs ordered along time and, within a jump, from left limit to value.
    Each candidate level is decided exactly by free-space reachability; a
    doubling then bisection search brackets the value.
    """
    _check_common_horizon(x, y)
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    P = x.graph_vertices()
    Q = y.graph_vertices()
    # fixed argument order makes the result exactly symmetric
    if (len(P), P.tobytes()) > (len(Q), Q.tobytes()):
        P, Q = Q, P
    lo = max(float(np.max(np.abs(P[0] - Q[0]))), float(np.max(np.abs(P[-1] - Q[-1]))))
    if _decide_graphs(P, Q, lo):
        return lo
    hi = max(2.0 * lo, epsilon)
    it = 0
    while not _decide_graphs(P, Q, hi):
        lo = hi
        hi *= 2.0
        it += 1
        if it > max_iter:
            raise AccuracyError("M1 search failed to find an upper bound", achieved=None)
    while hi - lo > epsilon:
        it += 1
        if it > max_iter:
            raise AccuracyError(
                f"M1 search stopped with bracket width {hi - lo:g} > {epsilon:g}",
                achieved=hi, diagnostic={"lower": lo, "upper": hi},
            )
        mid = 0.5 * (lo + hi)
        if _decide_graphs(P, Q, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# J1


def _j1_step_exact(x: CadlagPath, y: CadlagPath) -> float:
    sx, vx = x.step_pieces()
    sy, vy = y.step_pieces()
    s = sx[1:]
    r = sy[1:]
    T = x.horizon
    vals = np.abs(vx[:, None] - vy[None, :]).ravel()
    times = np.abs(s[:, None] - r[None, :]).ravel()
    cands = np.unique(np.concatenate(([0.0], vals, times)))
    end_gap = abs(float(x(T)) - float(y(T)))
    cands = cands[cands >= end_gap]
    lo, hi = 0, len(cands) - 1
    if not kernels.j1_decide(s, vx, r, vy, T, cands[hi]):
        # always feasible at the largest candidate; guard against misuse
        raise AccuracyError("J1 decision infeasible at the largest candidate")
    while lo < hi:
        mid = (lo + hi) // 2
        if kernels.j1_decide(s, vx, r, vy, T, cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def _to_step(path: CadlagPath, grid: int):
    if path.kind == STEP:
        return path, 0.0
    T = path.horizon
    h = T / grid
    nodes = np.arange(grid) * h
    # the sample grid plus every original breakpoint keeps jumps in place
    knots = np.union1d(nodes, path.times[:-1])
    vals = path(knots)
    seg = np.abs(path.left[1:] - path.right[:-1]) / np.diff(path.times)
    gap = float(np.max(np.diff(np.concatenate((knots, [T])))))
    bound = float(np.max(seg)) * gap if seg.size else 0.0
    return CadlagPath.step(knots[1:], vals, T), bound


def j1_distance(x: CadlagPath, y: CadlagPath, grid: int = 4096) -> float:
    """Skorokhod J1 distance on ``[0, T]``.

    Exact for step paths (jumps strictly inside ``(0, T)``).  Piecewise-linear
    inputs are replaced by step approximations; see :func:`j1_distance_bound`
    for the resulting error bound.
    """
    return j1_distance_bound(x, y, grid)[0]


def j1_distance_bound(x: CadlagPath, y: CadlagPath, grid: int = 4096):
    """``(value, bound)``: J1 distance and the sup-norm error of any step approximation."""
    _check_common_horizon(x, y)
    xs, bx = _to_step(x, grid)
    ys, by = _to_step(y, grid)
    return _j1_step_exact(xs, ys), bx + by


# ---------------------------------------------------------------------------
# plateau sets and oscillation


def flat_intervals(s: CadlagPath):
    """Maximal closed intervals of positive length on which ``s`` is constant."""
    if np.any(s.left != s.right):
        raise ParameterError("flat intervals need a continuous path")
    flat = s.right[:-1] == s.left[1:]
    out = []
    i = 0
    n = flat.size
    while i < n:
        if flat[i]:
            j = i
            while j + 1 < n and flat[j + 1] and s.right[j + 1] == s.right[i]:
                j += 1
            out.append((float(s.times[i]), float(s.times[j + 1])))
            i = j + 1
        else:
            i += 1
    return out


def plateau_set(s: CadlagPath, delta: float):
    """Times ``t`` with ``s`` constant on ``(t - delta, t + delta) & [0, T]``.

    ``s`` must be continuous and nondecreasing.  Returned as disjoint closed
    intervals in increasing order.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if not s.is_nondecreasing():
        raise ParameterError("plateau sets need a nondecreasing path")
    T = s.horizon
    out = []
    for a, b in flat_intervals(s):
        lo = a if a == 0.0 else a + delta
        hi = b if b == T else b - delta
        if lo <= hi:
            out.append((lo, hi))
    return out


def in_plateau_set(intervals, t):
    t = np.asarray(t, dtype=float)
    hit = np.zeros(t.shape, dtype=bool)
    for a, b in intervals:
        hit |= (t >= a) & (t <= b)
    return hit


def oscillation(x: CadlagPath, delta: float) -> float:
    """Modulus ``w'_x(delta)``: best max within-cell range over partitions with gaps > delta.

    Exact for step paths.  Cells are half-open, so a cut at a jump time
    separates the two sides of the jump.
    """
    if x.kind != STEP:
        raise ParameterError("oscillation modulus is computed for step paths only")
    T = x.horizon
    if not 0.0 < delta < T:
        raise ParameterError("delta must lie in (0, T)")
    starts, vals = x.step_pieces()
    m = vals.size
    cands = [0.0]
    for k in range(m):
        mn = mx = vals[k]
        for kk in range(k + 1, m):
            mn = min(mn, vals[kk])
            mx = max(mx, vals[kk])
            cands.append(mx - mn)
    cands = np.unique(np.array(cands))
    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if kernels.osc_decide(starts, vals, T, float(delta), float(cands[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])

"""Continuous-time random walk built from a chain's observables.

Renewal times are ``t_N = tau(X_0) + ... + tau(X_{N-1})``, partial sums
``S_N = V(X_0) + ... + V(X_{N-1})`` and ``n(t)`` is the index of the last
renewal not after ``t``.  The walk is ``W(t) = S_{n(t)}``; its linear
interpolation ``W_hat`` spreads the pending jump over the current holding
interval.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import ParameterError, RangeError
from .paths import LINEAR, CadlagPath

MC_TRUNCATED_MEAN_DRAWS = 1_000_000


@dataclass(frozen=True, eq=False)
class CtrwTrajectory:
    renewal_times: np.ndarray
    partial_sums: np.ndarray
    jump_values: np.ndarray

    @property
    def n_steps(self):
        return self.jump_values.size

    @property
    def horizon(self):
        return float(self.renewal_times[-1])

    @classmethod
    def from_observables(cls, taus, vs):
        taus = np.asarray(taus, dtype=float)
        vs = np.asarray(vs, dtype=float)
        t = np.concatenate(([0.0], np.cumsum(taus)))
        s = np.concatenate(([0.0], np.cumsum(vs)))
        return cls(t, s, vs)

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("k,t_k,S_k,V_k\n")
        for k in range(self.n_steps + 1):
            v = repr(float(self.jump_values[k])) if k < self.n_steps else ""
            buf.write(f"{k},{float(self.renewal_times[k])!r},{float(self.partial_sums[k])!r},{v}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def simulate_trajectory(chain, n_steps: int, rng) -> CtrwTrajectory:
    """Exactly ``n_steps`` renewal intervals of the walk driven by ``chain``."""
    if n_steps < 1:
        raise ParameterError("n_steps must be at least 1")
    taus, vs = chain.sample_observables(int(n_steps), rng)
    if np.any(taus < chain.t_star):
        raise ParameterError("chain produced a holding time below its t_star bound")
    return CtrwTrajectory.from_observables(taus, vs)


def simulate_until(chain, level: float, rng, chunk: int = 256) -> CtrwTrajectory:
    """Trajectory extended chunk by chunk until the last renewal exceeds ``level``."""
    tau_parts, v_parts = [], []
    t = 0.0
    s = 0.0
    size = int(chunk)
    while True:
        taus, vs = chain.sample_observables(size, rng)
        idx, t, s = kernels.first_passage(taus, vs, t, s, float(level))
        tau_parts.append(taus)
        v_parts.append(vs)
        if idx < size:
            taus = np.concatenate(tau_parts)
            vs = np.concatenate(v_parts)
            consumed = sum(len(p) for p in tau_parts[:-1]) + idx + 1
            return CtrwTrajectory.from_observables(taus[:consumed], vs[:consumed])
        size *= 2


def _index(traj: CtrwTrajectory, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= traj.horizon):
        raise RangeError("time outside the simulated range [0, last renewal)")
    return np.searchsorted(traj.renewal_times, t, side="right") - 1


def counting_process(traj: CtrwTrajectory, t):
    """``n(t)``: number of renewals in ``(0, t]``, so ``t_n <= t < t_{n+1}``."""
    n = _index(traj, t)
    return int(n) if np.ndim(n) == 0 else n


def ctrw_value(traj: CtrwTrajectory, t):
    """``W(t) = S_{n(t)}`` (right-continuous at renewal instants)."""
    out = traj.partial_sums[_index(traj, t)]
    return float(out) if np.ndim(out) == 0 else out


def ctrw_interpolated(traj: CtrwTrajectory, t):
    """``W_hat(t)``: ``S_n`` plus the fraction of ``V(X_n)`` elapsed by time ``t``."""
    t = np.asarray(t, dtype=float)
    n = _index(traj, t)
    t0 = traj.renewal_times[n]
    t1 = traj.renewal_times[n + 1]
    out = traj.partial_sums[n] + (t - t0) / (t1 - t0) * traj.jump_values[n]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class ScaledPair:
    s_path: CadlagPath
    t_path: CadlagPath
    scale_n: int
    alpha: float
    beta: float
    v_n: float = 0.0
    v_n_se: float = 0.0

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# K={self.scale_n} alpha={float(self.alpha)!r} beta={float(self.beta)!r} v_n={float(self.v_n)!r} "
                  f"s_kind={self.s_path.kind}\n")
        buf.write("t,s,T\n")
        for t, s, T in zip(self.t_path.times, self.s_path.right, self.t_path.right):
            buf.write(f"{float(t)!r},{float(s)!r},{float(T)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def truncated_mean(chain, K, rng=None, draws=MC_TRUNCATED_MEAN_DRAWS):
    """``(E[V 1{|V| <= K}], standard error)``; exact when the chain knows it."""
    if chain.truncated_mean is not None:
        return float(chain.truncated_mean(K)), 0.0
    if chain.finite is not None:
        v = chain.finite.v
        return float(np.sum(chain.finite.pi * v * (np.abs(v) <= K))), 0.0
    if rng is None:
        raise ParameterError("Monte Carlo truncated mean needs an rng")
    _, vs = chain.sample_observables(int(draws), rng)
    w = vs * (np.abs(vs) <= K)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(w.size))


def scale(traj: CtrwTrajectory, K: int, alpha: float, beta: float, horizon: float = 1.0,
          v_n: Optional[float] = None, v_n_se: float = 0.0) -> ScaledPair:
    """Scaled pair ``(K^{-1/beta} S_[Kt], K^{-1/alpha} t_[Kt])`` on ``[0, horizon]``.

    For ``beta == 1`` the first coordinate is ``K^{-1} S_[Kt] - v_n t`` and
    ``v_n`` must be supplied (see :func:`truncated_mean`).
    """
    K = int(K)
    if K < 1:
        raise ParameterError("K must be a positive integer")
    m = int(math.floor(K * horizon))
    if traj.n_steps < m:
        raise RangeError(f"trajectory has {traj.n_steps} steps, scaling needs {m}")
    grid = np.arange(1, m + 1) / K
    svals = traj.partial_sums[: m + 1]
    tvals = traj.renewal_times[: m + 1]
    t_path = CadlagPath.step(grid, tvals * K ** (-1.0 / alpha), horizon)
    if beta == 1.0:
        if v_n is None:
            raise ParameterError("beta = 1 scaling needs the centring v_n")
        scaled = svals / K
        times = np.concatenate(([0.0], grid))
        drift = v_n * times
        right = scaled - drift
        left = np.concatenate(([0.0], scaled[:-1])) - drift
        if times[-1] < horizon:
            times = np.append(times, horizon)
            right = np.append(right, scaled[-1] - v_n * horizon)
            left = np.append(left, scaled[-1] - v_n * horizon)
        s_path = CadlagPath(times, left, right, LINEAR)
    else:
        v_n = 0.0
        s_path = CadlagPath.step(grid, svals * K ** (-1.0 / beta), horizon)
    return ScaledPair(s_path, t_path, K, alpha, beta, float(v_n), float(v_n_se))


def interpolated_scaled_path(traj: CtrwTrajectory, K: int, beta: float, horizon: float = 1.0,
                             v_n: float = 0.0) -> CadlagPath:
    """Nodal linear interpolation of the scaled partial sums through ``(k/K, S_k)``."""
    m = int(math.floor(K * horizon))
    if traj.n_steps < m:
        raise RangeError("trajectory too short for the requested scaling")
    times = np.arange(m + 1) / K
    if beta == 1.0:
        vals = traj.partial_sums[: m + 1] / K - v_n * times
    else:
        vals = traj.partial_sums[: m + 1] * K ** (-1.0 / beta)
    if times[-1] < horizon:
        times = np.append(times, horizon)
        vals = np.append(vals, vals[-1])
    return CadlagPath.linear(times, vals)


def scaled_endpoint(chain, K: int, alpha: float, beta: float, rng, t: float = 1.0,
                    v_n: float = 0.0):
    """``(S^{(N)}_t, T^{(N)}_t)`` from one fresh run of ``[K t]`` steps."""
    m = int(math.floor(K * t))
    taus, vs = chain.sample_observables(m, rng)
    T = float(np.sum(taus)) * K ** (-1.0 / alpha)
    if beta == 1.0:
        S = float(np.sum(vs)) / K - v_n * t
    else:
        S = float(np.sum(vs)) * K ** (-1.0 / beta)
    return S, T


def ctrw_at_time(chain, horizon: float, rng):
    """``(W(horizon), W_hat(horizon), n(horizon))`` from one fresh run."""
    traj = simulate_until(chain, horizon, rng)
    n = counting_process(traj, horizon)
    return ctrw_value(traj, horizon), ctrw_interpolated(traj, horizon), n

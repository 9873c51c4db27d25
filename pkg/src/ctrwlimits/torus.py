"""Jump process on the circle with a rate that vanishes at two antipodal points.

The process sits at ``k`` for an exponential time of rate ``gamma(k)`` and
then jumps to ``theta`` drawn from ``rhat(theta, k) dtheta``.  It is built
from its skeleton chain ``(X_n, rho_n)``: ``X`` moves by the kernel and the
holding times are ``rho_n / gamma(X_n)`` with unit exponentials ``rho_n``.

Kernel densities are taken with respect to ``dtheta`` on ``(-pi, pi]``;
``r0`` bounds ``2 pi rhat`` (the density against normalised Lebesgue
measure) from below, and ``1 / r0`` bounds it from above.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import NumericalError, ParameterError
from .chain import ChainModel

TWO_PI = 2.0 * math.pi
GAMMA_FLOOR = 1e-300


class TorusDiagnostic(UserWarning):
    pass


def wrap(x):
    """Map reals onto ``(-pi, pi]``."""
    y = math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)
    return float(y) if np.ndim(y) == 0 else y


def torus_distance(a, b):
    d = np.abs(wrap(np.asarray(a) - np.asarray(b)))
    return float(d) if np.ndim(d) == 0 else d


# ---------------------------------------------------------------------------
# rate families


@dataclass(frozen=True)
class RateFunction:
    """``gamma(k) = c |cos k - cos k0|^kappa``; ``cos2`` is ``kappa=2, k0=pi/2``."""

    kappa: float = 2.0
    c: float = 1.0
    k0: float = math.pi / 2
    name: str = "powerZero"

    def __post_init__(self):
        if self.kappa <= 1.0:
            raise ParameterError("kappa must exceed 1 so that tau has a heavy tail")
        if self.c <= 0:
            raise ParameterError("rate constant must be positive")
        if not 0.0 < self.k0 < math.pi:
            raise ParameterError("k0 must lie strictly between 0 and pi")

    def __call__(self, k):
        return self.c * np.abs(np.cos(k) - math.cos(self.k0)) ** self.kappa

    @property
    def sup(self):
        return self.c * (1.0 + abs(math.cos(self.k0))) ** self.kappa

    @property
    def local_constant(self):
        """``c_*`` in ``gamma(k) ~ c_* |k -+ k0|^kappa``."""
        return self.c * math.sin(self.k0) ** self.kappa

    def check_zero_order(self, window=0.05, n=200):
        """Assert ``gamma / |k -+ k0|^kappa`` stays within ``[c_*/2, 2 c_*]`` near both zeros."""
        d = np.linspace(window / n, window, n)
        cs = self.local_constant
        for centre in (self.k0, -self.k0):
            for side in (1.0, -1.0):
                ratio = self(centre + side * d) / d**self.kappa
                if np.any(ratio < 0.5 * cs) or np.any(ratio > 2.0 * cs):
                    raise ParameterError(f"rate does not vanish at order {self.kappa} near {centre:.4g}")
        return True


def cos2_rate(c=1.0):
    return RateFunction(2.0, c, math.pi / 2, "cos2")


def power_zero_rate(kappa, c=1.0, k0=math.pi / 2):
    return RateFunction(float(kappa), c, k0, "powerZero")


# ---------------------------------------------------------------------------
# jump kernels (convolution type: rhat(theta, k) = f(theta - k))


@dataclass(frozen=True)
class JumpKernel:
    """``rhat(theta, k) = (1 + a cos(theta - k)) / (2 pi)``; ``a = 0`` is uniform."""

    amplitude: float = 0.0
    name: str = "uniformKernel"

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 1.0:
            raise ParameterError("kernel amplitude must lie in [0, 1)")

    @property
    def r0(self):
        return 1.0 - self.amplitude

    def __call__(self, theta, k):
        return (1.0 + self.amplitude * np.cos(np.asarray(theta) - np.asarray(k))) / TWO_PI

    def sample_increments(self, n, rng, stats=None):
        """``n`` draws of ``theta - k`` by rejection from the uniform law with envelope ``1/r0``."""
        if self.amplitude == 0.0:
            if stats is not None:
                stats[0] += n
                stats[1] += n
            return rng.uniform(-math.pi, math.pi, n)
        envelope = 1.0 / self.r0
        out = np.empty(n)
        filled = 0
        while filled < n:
            want = int((n - filled) * envelope * 1.2) + 8
            prop = rng.uniform(-math.pi, math.pi, want)
            ratio = (1.0 + self.amplitude * np.cos(prop)) / envelope
            keep = prop[rng.random(want) < ratio]
            if stats is not None:
                stats[0] += want
                stats[1] += keep.size
            take = min(keep.size, n - filled)
            out[filled: filled + take] = keep[:take]
            filled += take
        return out


def uniform_kernel():
    return JumpKernel(0.0, "uniformKernel")


def cosine_kernel(amplitude=0.5):
    return JumpKernel(float(amplitude), "cosineKernel")


# ---------------------------------------------------------------------------
# observables


def odd_linear_zero(k):
    """Odd, bounded, and vanishing linearly at the rate zeros ``+-pi/2``."""
    return np.sin(k) * np.abs(np.cos(k))


def odd_sine(k):
    return np.sin(k)


OBSERVABLES = {"odd_linear_zero": odd_linear_zero, "sine": odd_sine,
               "zero": lambda k: np.zeros_like(np.asarray(k, dtype=float)),
               "one": lambda k: np.ones_like(np.asarray(k, dtype=float))}


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class TorusModel:
    gamma: RateFunction
    kernel: JumpKernel
    observable: Optional[Callable] = None
    check_grid: int = 256

    def __post_init__(self):
        grid = -math.pi + TWO_PI * (np.arange(self.check_grid) + 0.5) / self.check_grid
        h = TWO_PI / self.check_grid
        th, kk = np.meshgrid(grid, grid, indexing="ij")
        dens = self.kernel(th, kk)
        if np.max(np.abs(dens.sum(axis=0) * h - 1.0)) > 1e-8 or np.max(np.abs(dens.sum(axis=1) * h - 1.0)) > 1e-8:
            raise ParameterError("jump kernel is not doubly stochastic")
        if np.max(np.abs(self.kernel(-th, -kk) - dens)) > 1e-12:
            raise ParameterError("jump kernel is not even")
        if np.max(np.abs(self.gamma(-grid) - self.gamma(grid))) > 1e-12:
            raise ParameterError("rate is not even")
        self.gamma.check_zero_order()

    @property
    def k0(self):
        return self.gamma.k0

    @property
    def alpha(self):
        return 1.0 / self.gamma.kappa

    @property
    def t_star_inv(self):
        return self.gamma.sup

    @property
    def r0(self):
        return self.kernel.r0

    def rate(self, k):
        return np.maximum(self.gamma(k), GAMMA_FLOOR)

    def rhat(self, theta, k):
        return self.kernel(theta, k)


def build_model(gamma="cos2", kernel="uniform", observable=None, kappa=2.0, c=1.0,
                k0=math.pi / 2, amplitude=0.5) -> TorusModel:
    """Model from the named families used in configs."""
    if gamma == "cos2":
        g = cos2_rate(c)
    elif gamma == "powerZero":
        g = power_zero_rate(kappa, c, k0)
    else:
        raise ParameterError(f"unknown rate family {gamma!r}")
    if kernel in ("uniform", "uniformKernel"):
        kern = uniform_kernel()
    elif kernel in ("cosine", "cosineKernel"):
        kern = cosine_kernel(amplitude)
    else:
        raise ParameterError(f"unknown kernel family {kernel!r}")
    obs = None
    if observable is not None:
        if observable not in OBSERVABLES:
            raise ParameterError(f"unknown observable {observable!r}")
        obs = OBSERVABLES[observable]
    return TorusModel(g, kern, obs)


# ---------------------------------------------------------------------------
# initial laws


@dataclass(frozen=True)
class InitialLaw:
    """Density against normalised Lebesgue measure, sampled by rejection."""

    density: Optional[Callable] = None
    upper: float = 1.0

    @classmethod
    def uniform(cls):
        return cls(None, 1.0)

    def sample(self, n, rng):
        if self.density is None:
            return rng.uniform(-math.pi, math.pi, n)
        out = np.empty(n)
        filled = 0
        while filled < n:
            prop = rng.uniform(-math.pi, math.pi, 2 * (n - filled) + 8)
            dens = self.density(prop)
            if np.any(dens > self.upper * (1 + 1e-12)):
                raise ParameterError("initial density exceeds its declared bound")
            keep = prop[rng.random(prop.size) * self.upper < dens]
            take = min(keep.size, n - filled)
            out[filled: filled + take] = keep[:take]
            filled += take
        return out


def _as_initial(law):
    if law is None or law == "uniform":
        return InitialLaw.uniform()
    if isinstance(law, InitialLaw):
        return law
    raise ParameterError("initial law must be 'uniform' or an InitialLaw")


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class TorusTrajectory:
    skeleton_states: np.ndarray
    exp_clocks: np.ndarray
    holding_times: np.ndarray
    jump_times: np.ndarray
    acceptance_rate: float = 1.0

    def state_at(self, t):
        """``K_t = X_n`` for ``t`` in ``[t_n, t_{n+1})``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t >= self.jump_times[-1]):
            raise ParameterError("time outside the simulated range")
        n = np.searchsorted(self.jump_times, t, side="right") - 1
        out = self.skeleton_states[n]
        return float(out) if np.ndim(out) == 0 else out


class _Skeleton:
    """Streams skeleton states, clocks and rates chunk by chunk for one replica."""

    def __init__(self, model: TorusModel, initial, rng):
        self.model = model
        self.rng = rng
        self.stats = [0, 0]
        self.current = float(self._redraw_initial(initial))

    def _redraw_initial(self, initial):
        while True:
            x = wrap(initial.sample(1, self.rng)[0])
            if self.model.gamma(x) > 0:
                return x

    def chunk(self, n):
        """``n`` consecutive states starting at the current one, plus clocks and rates."""
        m = self.model
        inc = m.kernel.sample_increments(n, self.rng, self.stats)
        states = np.empty(n)
        states[0] = self.current
        states[1:] = wrap(self.current + np.cumsum(inc[:-1]))
        g = m.gamma(states)
        while np.any(g == 0.0):
            # a state landed exactly on a zero of the rate; redraw the increment that produced it
            i = int(np.argmax(g == 0.0))
            if i == 0:
                raise NumericalError("current state sits on a zero of the rate", {"state": states[0]})
            inc[i - 1] = m.kernel.sample_increments(1, self.rng, self.stats)[0]
            states[i:] = wrap(states[i - 1] + np.cumsum(np.concatenate(([inc[i - 1]], inc[i:-1]))))
            g = m.gamma(states)
        self.current = float(wrap(states[-1] + inc[-1]))
        while m.gamma(self.current) == 0.0:
            self.current = float(wrap(states[-1] + m.kernel.sample_increments(1, self.rng, self.stats)[0]))
        clocks = self.rng.exponential(1.0, n)
        return states, clocks, np.maximum(g, GAMMA_FLOOR)

    def check_acceptance(self):
        proposed, accepted = self.stats
        rate = accepted / proposed if proposed else 1.0
        if proposed >= 1000 and rate < self.model.r0**2:
            warnings.warn(f"rejection acceptance {rate:.3g} below r0^2; kernel bounds look wrong",
                          TorusDiagnostic, stacklevel=3)
        return rate


def simulate_torus(model: TorusModel, n_jumps: int, initial_law="uniform", rng=None) -> TorusTrajectory:
    """Skeleton chain and holding times for ``n_jumps`` jumps."""
    if n_jumps < 1:
        raise ParameterError("n_jumps must be at least 1")
    if rng is None:
        raise ParameterError("an rng is required")
    sk = _Skeleton(model, _as_initial(initial_law), rng)
    states, clocks, g = sk.chunk(int(n_jumps))
    holds = clocks / g
    times = np.concatenate(([0.0], np.cumsum(holds)))
    return TorusTrajectory(states, clocks, holds, times, sk.check_acceptance())


def states_at_times(model: TorusModel, times, rng, initial_law="uniform", chunk=64):
    """``K_t`` for each ``t`` in the sorted list ``times`` from one fresh trajectory."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ParameterError("times must be sorted and nonnegative")
    sk = _Skeleton(model, _as_initial(initial_law), rng)
    out = np.empty(times.size)
    clock = 0.0
    states, clocks, g = sk.chunk(chunk)
    pos = 0
    for j, level in enumerate(times):
        while True:
            idx, clock = kernels.torus_hold(g[pos:], clocks[pos:], clock, float(level))
            pos += idx
            if pos < states.size:
                out[j] = states[pos]
                break
            chunk *= 2
            states, clocks, g = sk.chunk(chunk)
            pos = 0
    return out


def mixing_diagnostic(model: TorusModel, t_grid, n_replicas: int, delta: float, rng,
                      initial_law="uniform"):
    """Per ``t``: fraction of replicas within ``delta`` of ``{-k0, +k0}`` and the ``+`` share.

    ``rng`` is either a single generator (replicas drawn in sequence) or a
    list with one generator per replica.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    order = np.argsort(t_grid, kind="stable")
    rngs = rng if isinstance(rng, (list, tuple)) else [rng] * n_replicas
    if len(rngs) != n_replicas:
        raise ParameterError("need one generator per replica")
    finals = np.empty((n_replicas, t_grid.size))
    for i in range(n_replicas):
        finals[i, order] = states_at_times(model, t_grid[order], rngs[i], initial_law)
    return mixing_summary(model, t_grid, finals, delta)


def mixing_summary(model, t_grid, finals, delta):
    k0 = model.k0
    rows = []
    n = finals.shape[0]
    for j, t in enumerate(t_grid):
        plus = torus_distance(finals[:, j], k0) < delta
        minus = torus_distance(finals[:, j], -k0) < delta
        near = plus | minus
        mass = near.mean()
        hits = int(near.sum())
        split = plus.sum() / hits if hits else float("nan")
        rows.append({"t": float(t), "mass": float(mass),
                     "mass_se": float(math.sqrt(max(mass * (1 - mass), 1e-300) / n)),
                     "plus_share": float(split),
                     "plus_share_se": float(math.sqrt(split * (1 - split) / hits)) if hits else float("nan"),
                     "replicas": int(n)})
    return rows


def additive_functional(model: TorusModel, psi=None, scaling_beta: float = 1.0, N: int = 1,
                        t: float = 1.0, rng=None, initial_law="uniform", scaled: bool = True,
                        chunk: int = 64):
    """``N^{-alpha/beta} * integral_0^{N t} psi(K_s) ds`` computed exactly over holding intervals.

    With ``scaled=False`` the raw integral is returned.
    """
    psi = psi if psi is not None else model.observable
    if psi is None:
        raise ParameterError("no observable given")
    if rng is None:
        raise ParameterError("an rng is required")
    level = float(N) * float(t)
    sk = _Skeleton(model, _as_initial(initial_law), rng)
    clock = 0.0
    acc = 0.0
    while True:
        states, clocks, g = sk.chunk(chunk)
        idx, clock, acc, done = kernels.weighted_partial(np.asarray(psi(states), dtype=float), g, clocks,
                                                         clock, level, acc)
        if done:
            break
        chunk *= 2
    if not scaled:
        return float(acc)
    return float(acc) * float(N) ** (-model.alpha / scaling_beta)


# ---------------------------------------------------------------------------
# invariant measure


def generator_over_rate(model: TorusModel, f_vals, grid):
    """``L f / gamma`` on a uniform periodic grid (rectangle rule, spectrally exact for trig f)."""
    h = TWO_PI / grid.size
    th, kk = np.meshgrid(grid, grid, indexing="ij")
    w = model.rhat(th, kk) * h
    return w.T @ f_vals - f_vals


def invariant_measure_check(model: TorusModel, n_steps: int = 1024, rng=None, n_random: int = 10,
                            n_modes: int = 4):
    """Residuals of ``<Lf, g>_m = <f, Lg>_m`` and ``<Lf, 1>_m = 0`` for ``m = gamma^{-1} m_1``.

    ``Lf * g / gamma`` needs no quadrature near the rate zeros because the
    rate cancels, so no window is excluded.
    """
    grid = -math.pi + TWO_PI * (np.arange(n_steps) + 0.5) / n_steps
    basis = [np.ones_like(grid)]
    for m in range(1, n_modes + 1):
        basis += [np.cos(m * grid), np.sin(m * grid)]
    lb = [generator_over_rate(model, f, grid) for f in basis]
    sym = 0.0
    for i in range(len(basis)):
        for j in range(len(basis)):
            a = np.mean(lb[i] * basis[j])
            b = np.mean(basis[i] * lb[j])
            sym = max(sym, abs(a - b))
    mean_zero = 0.0
    if rng is not None:
        for _ in range(n_random):
            coef = rng.normal(size=(2, n_modes))
            f = sum(coef[0, m - 1] * np.cos(m * grid) + coef[1, m - 1] * np.sin(m * grid)
                    for m in range(1, n_modes + 1))
            mean_zero = max(mean_zero, abs(np.mean(generator_over_rate(model, f, grid))))
    return {"symmetry_residual": float(sym), "mean_zero_residual": float(mean_zero),
            "excluded_window": 0.0, "grid": int(n_steps)}


# ---------------------------------------------------------------------------
# skeleton as a chain for the CTRW machinery


def skeleton_chain(gamma="cos2", kernel="uniform", observable="odd_linear_zero", **family) -> ChainModel:
    """Stationary skeleton ``(X_n, rho_n)`` with ``tau = rho / gamma(X)`` and ``V = psi(X) tau``."""
    model = build_model(gamma, kernel, observable, **family)
    psi = model.observable

    def initial(rng):
        return (float(rng.uniform(-math.pi, math.pi)), float(rng.exponential()))

    def step(x, rng):
        k = wrap(x[0] + model.kernel.sample_increments(1, rng)[0])
        return (float(k), float(rng.exponential()))

    def tau_of(x):
        return float(x[1] / model.rate(x[0]))

    def v_of(x):
        return float(psi(x[0]) * tau_of(x))

    def sampler(n, rng):
        sk = _Skeleton(model, InitialLaw.uniform(), rng)
        states, clocks, g = sk.chunk(int(n))
        taus = clocks / g
        return taus, psi(states) * taus

    params = dict(gamma=gamma, kernel=kernel, observable=observable, **family)
    return ChainModel("torus_skeleton", step, initial, tau_of, v_of, 0.0, params, sampler=sampler)

"""Limit Levy pairs ``(S, T)``, the right inverse of ``T`` and the walks it drives.

Three regimes are supported:

``independent``
    ``S`` is ``beta``-stable and ``T`` an independent ``alpha``-stable
    subordinator; the two never jump together.
``coupled``
    every jump is a pair ``(l, rho(l))`` with ``rho(l) = C |l|^(beta/alpha)``.
``brownian``
    ``S`` is a Brownian motion with variance ``sigma^2`` per unit time and
    ``T`` an independent ``alpha``-stable subordinator.

Paths are synthesised as compound Poisson processes of the jumps above a
cutoff ``r``.  The jumps below ``r`` are replaced by their mean (a drift) and,
for the ``S`` coordinate, optionally by a Brownian term with their variance.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .chain import coupling_constant
from .errors import ParameterError, RangeError
from .paths import CadlagPath
from .stable_laws import StableSpec

REGIMES = ("independent", "coupled", "brownian")
DEFAULT_JUMP_RATE = 1000.0
DEFAULT_GRID_STEP = 1.0 / 1024


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LimitSpec:
    alpha: float
    beta: float
    c_alpha: float = 1.0
    c_plus: float = 1.0
    c_minus: float = 0.0
    regime: str = "independent"
    sigma: float = 0.0
    truncation: Optional[float] = None
    coupling: Optional[float] = None
    small_jump_gaussian: bool = True
    grid_step: float = DEFAULT_GRID_STEP

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ParameterError(f"regime must be one of {REGIMES}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")
        if self.c_alpha <= 0:
            raise ParameterError("c_alpha must be positive")
        if self.regime == "brownian":
            if self.beta != 2.0:
                raise ParameterError("the brownian regime has beta = 2")
            if self.sigma < 0:
                raise ParameterError("sigma must be nonnegative")
        else:
            if not 0.0 < self.beta < 2.0:
                raise ParameterError("jump regimes need beta in (0, 2)")
            if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
                raise ParameterError("need c_plus + c_minus > 0")
        if self.truncation is not None and self.truncation <= 0:
            raise ParameterError("truncation must be positive")
        if self.grid_step <= 0:
            raise ParameterError("grid_step must be positive")

    @property
    def total(self):
        return self.c_plus + self.c_minus

    @property
    def coupling_constant(self):
        if self.coupling is not None:
            return float(self.coupling)
        return coupling_constant(self.alpha, self.c_alpha, self.c_plus, self.c_minus)

    def rho(self, lam):
        return self.coupling_constant * np.abs(lam) ** (self.beta / self.alpha)

    def rho_inverse(self, x):
        return (np.asarray(x) / self.coupling_constant) ** (self.alpha / self.beta)

    @property
    def s_law(self) -> StableSpec:
        if self.regime == "brownian":
            return StableSpec.gaussian(self.sigma**2)
        return StableSpec(self.beta, self.c_plus, self.c_minus)

    @property
    def t_law(self) -> StableSpec:
        """Law of ``T_1``: one-sided ``alpha``-stable."""
        if self.regime == "coupled":
            return StableSpec.one_sided(self.alpha, self.total * self.coupling_constant**self.alpha)
        return StableSpec.one_sided(self.alpha, self.c_alpha)

    def jump_rate(self, r):
        """Expected number of jumps per unit time above cutoff ``r``."""
        if self.regime == "brownian":
            return self.c_alpha * r ** (-self.alpha)
        if self.regime == "independent":
            return self.total * r ** (-self.beta) + self.c_alpha * r ** (-self.alpha)
        r1 = min(r, float(self.rho_inverse(r)))
        return self.total * r1 ** (-self.beta)

    def default_truncation(self, rate=DEFAULT_JUMP_RATE):
        f = lambda logr: math.log(self.jump_rate(math.exp(logr))) - math.log(rate)
        return math.exp(optimize.brentq(f, -200.0, 200.0, xtol=1e-12))

    @property
    def cutoff(self):
        return self.truncation if self.truncation is not None else self.default_truncation()

    def with_truncation(self, r):
        return replace(self, truncation=float(r))


# ---------------------------------------------------------------------------
# exponents


def joint_exponent(spec: LimitSpec):
    """Characteristic exponent ``psi(xi1, xi2)`` of ``(S_1, T_1)``.

    Closed form for the independent and brownian regimes.  For the coupled
    regime the Levy-Khintchine integral over the coupling curve is evaluated
    by quadrature.
    """
    if spec.regime != "coupled":
        s_law = spec.s_law
        t_law = spec.t_law

        def psi(xi1, xi2):
            return complex(s_law.exponent(float(xi1))) + complex(t_law.exponent(float(xi2)))

        return psi

    b = spec.beta
    C = spec.coupling_constant
    power = b / spec.alpha

    def psi(xi1, xi2):
        xi1 = float(xi1)
        xi2 = float(xi2)

        def part(lam, sign):
            l1 = sign * lam
            phase = l1 * xi1 + C * lam**power * xi2
            val = complex(math.cos(phase) - 1.0, math.sin(phase))
            if b == 1.0 and lam <= 1.0:
                val -= 1j * xi1 * l1
            elif b > 1.0:
                val -= 1j * xi1 * l1
            return val * b * lam ** (-1.0 - b)

        # geometric panels out to where the oscillating part is below 1e-13;
        # the non-oscillating remainder beyond that point is added in closed form
        reach = min(1e-13 ** (-1.0 / b), 1e300)
        edges = [0.0, 1.0]
        while edges[-1] < reach:
            edges.append(min(edges[-1] * 4.0, reach))
        total = 0.0 + 0.0j
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for sign, c in ((1.0, spec.c_plus), (-1.0, spec.c_minus)):
                if c == 0:
                    continue
                for lo, hi in zip(edges[:-1], edges[1:]):
                    re = integrate.quad(lambda l: part(l, sign).real, lo, hi, limit=200)[0]
                    im = integrate.quad(lambda l: part(l, sign).imag, lo, hi, limit=200)[0]
                    total += c * complex(re, im)
                tail = -(reach ** (-b))
                if b > 1.0:
                    tail -= 1j * xi1 * sign * b / (b - 1.0) * reach ** (1.0 - b)
                total += c * tail
        return total

    return psi


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class LevyPairPath:
    jump_times: np.ndarray
    jump_s: np.ndarray
    jump_t: np.ndarray
    drift_s: float
    drift_t: float
    horizon: float
    regime: str = "independent"
    gauss_step: float = 0.0
    gauss_values: Optional[np.ndarray] = None

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        if jt.size and (np.any(np.diff(jt) < 0) or jt[0] < 0 or jt[-1] > self.horizon):
            raise ParameterError("jump times must be sorted inside [0, horizon]")
        if np.any(np.asarray(self.jump_t) < 0):
            raise ParameterError("T jumps must be nonnegative")
        if self.drift_t <= 0:
            raise ParameterError("T needs a positive drift to be strictly increasing")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "jump_s", np.asarray(self.jump_s, dtype=float))
        object.__setattr__(self, "jump_t", np.asarray(self.jump_t, dtype=float))
        object.__setattr__(self, "_cum_s", np.concatenate(([0.0], np.cumsum(self.jump_s))))
        mask = self.jump_t > 0
        tt = jt[mask]
        tj = self.jump_t[mask]
        # same arithmetic as T and T_left so plateau ends agree with them bit for bit
        cum = np.cumsum(tj)
        after = self.drift_t * tt + cum
        before = self.drift_t * tt + np.concatenate(([0.0], cum[:-1]))
        object.__setattr__(self, "_tj_times", tt)
        object.__setattr__(self, "_tj_after", after)
        object.__setattr__(self, "_tj_before", before)
        object.__setattr__(self, "_cum_t", np.concatenate(([0.0], np.cumsum(self.jump_t))))

    # -- coordinates -----------------------------------------------------
    def _gauss(self, u):
        if self.gauss_values is None:
            return 0.0
        g = self.gauss_values
        pos = np.asarray(u) / self.gauss_step
        i = np.minimum(np.floor(pos).astype(np.int64), g.size - 2)
        frac = pos - i
        return g[i] + frac * (g[i + 1] - g[i])

    def _check_u(self, u):
        if np.any(np.asarray(u) < 0) or np.any(np.asarray(u) > self.horizon):
            raise RangeError("path time outside [0, horizon]")

    def S(self, u):
        self._check_u(u)
        k = np.searchsorted(self.jump_times, u, side="right")
        return self.drift_s * np.asarray(u) + self._cum_s[k] + self._gauss(u)

    def S_left(self, u):
        """``S_{u-}``, with ``S_{0-} = 0``."""
        self._check_u(u)
        k = np.searchsorted(self.jump_times, u, side="left")
        return self.drift_s * np.asarray(u) + self._cum_s[k] + self._gauss(u)

    def T(self, u):
        self._check_u(u)
        k = np.searchsorted(self.jump_times, u, side="right")
        return self.drift_t * np.asarray(u) + self._cum_t[k]

    def T_left(self, u):
        self._check_u(u)
        k = np.searchsorted(self.jump_times, u, side="left")
        return self.drift_t * np.asarray(u) + self._cum_t[k]

    @property
    def T_end(self):
        return float(self.T(self.horizon))

    # -- inverse ---------------------------------------------------------
    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise RangeError("inverse requested at negative time")
        if np.any(t >= self.T_end):
            raise RangeError("time beyond T(horizon); extend the path")
        k = np.searchsorted(self._tj_before, t, side="right") - 1
        return t, k

    def right_inverse(self, t):
        """``s(t) = inf{u : T_u > t}``, taken over doubles.

        The result is the smallest double ``u`` with ``T(u) > t``, so every
        earlier double has ``T <= t``.
        """
        t, k = self._locate(t)
        kk = np.maximum(k, 0)
        has = k >= 0
        u_k = np.where(has, self._tj_times[kk] if self._tj_times.size else 0.0, 0.0)
        after = np.where(has, self._tj_after[kk] if self._tj_after.size else 0.0, 0.0)
        inside = has & (t < after)
        linear = np.where(has, u_k + (t - after) / self.drift_t, t / self.drift_t)
        out = np.where(inside, u_k, np.clip(linear, 0.0, self.horizon))
        # on doubles the infimum is the smallest u with T(u) > t; the division can
        # land an ulp or two away from it, so walk there (T is monotone in floats)
        for _ in range(64):
            up = self.T(out) <= t
            prev = np.nextafter(out, -np.inf)
            down = ~up & (prev >= 0) & (self.T(np.maximum(prev, 0.0)) > t)
            if not (up.any() or down.any()):
                break
            out = np.where(up, np.nextafter(out, np.inf), np.where(down, prev, out))
        return float(out) if out.ndim == 0 else out

    def zeta(self, t):
        """``S`` at ``s(t)``: the walk including the jump in flight."""
        out = self.S(self.right_inverse(t))
        return float(out) if np.ndim(out) == 0 else out

    def zeta_minus(self, t):
        """``S`` just before ``s(t)``; right-continuous in ``t`` at plateau ends."""
        t_arr, k = self._locate(t)
        s = np.asarray(self.right_inverse(t_arr))
        val = self.S_left(s)
        if self._tj_after.size:
            kk = np.maximum(k, 0)
            at_end = (k >= 0) & (t_arr == self._tj_after[kk])
            val = np.where(at_end, self.S(s), val)
        return float(val) if np.ndim(val) == 0 else val

    def inverse_path(self, t_max=None):
        """The right inverse on ``[0, t_max]`` as a continuous piecewise-linear path."""
        t_max = self.T_end if t_max is None else float(t_max)
        if t_max > self.T_end:
            raise RangeError("t_max beyond T(horizon)")
        lo = self._tj_before
        hi = self._tj_after
        keep = lo < t_max
        pts_t = [0.0]
        pts_s = [0.0]
        for a, b, u in zip(lo[keep], np.minimum(hi[keep], t_max), self._tj_times[keep]):
            if a > pts_t[-1]:
                pts_t.append(float(a))
                pts_s.append(float(u))
            elif a == pts_t[-1]:
                pts_s[-1] = float(u)
            if b > pts_t[-1]:
                pts_t.append(float(b))
                pts_s.append(float(u))
        if t_max > pts_t[-1]:
            pts_t.append(t_max)
            pts_s.append(float(self.right_inverse(min(t_max, np.nextafter(self.T_end, 0)))))
        return CadlagPath.linear(pts_t, pts_s)

    def to_jsonl(self, path=None):
        lines = [json.dumps({"record": "drift", "dS": self.drift_s, "dT": self.drift_t,
                             "horizon": self.horizon, "regime": self.regime,
                             "gauss_step": self.gauss_step})]
        for u, a, b in zip(self.jump_times, self.jump_s, self.jump_t):
            lines.append(json.dumps({"record": "jump", "time": float(u), "dS": float(a), "dT": float(b)}))
        if self.gauss_values is not None:
            lines.append(json.dumps({"record": "gauss", "values": self.gauss_values.tolist()}))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _pareto(rng, r, index, n):
    return r * (1.0 - rng.random(n)) ** (-1.0 / index)


def _s_compensation(beta, c_plus, c_minus, r):
    """Drift standing in for the ``S`` jumps at or below ``r``."""
    diff = c_plus - c_minus
    if beta < 1.0:
        return beta * diff * r ** (1.0 - beta) / (1.0 - beta)
    if beta == 1.0:
        # jumps in (r, 1] are compensated by the [-1, 1] truncation
        return -diff * math.log(1.0 / r)
    return -beta * diff * r ** (1.0 - beta) / (beta - 1.0)


def _small_jump_variance(beta, total, r):
    return beta * total * r ** (2.0 - beta) / (2.0 - beta)


def _gaussian_grid(rng, horizon, step, variance_rate):
    n = int(math.ceil(horizon / step))
    inc = rng.normal(0.0, math.sqrt(variance_rate * step), size=n)
    return np.concatenate(([0.0], np.cumsum(inc)))


def sample_levy_pair(spec: LimitSpec, horizon: float, rng) -> LevyPairPath:
    """One path of ``(S, T)`` on ``[0, horizon]``."""
    if horizon <= 0:
        raise ParameterError("horizon must be positive")
    r = spec.cutoff
    rate = spec.jump_rate(r)
    if rate * horizon < 1.0:
        warnings.warn(f"cutoff {r:g} leaves {rate * horizon:.3g} expected jumps on the horizon",
                      TruncationWarning, stacklevel=2)
    a = spec.alpha
    gauss = None
    step = 0.0
    if spec.regime in ("independent", "brownian"):
        n_t = rng.poisson(spec.c_alpha * r ** (-a) * horizon)
        t_times = rng.random(n_t) * horizon
        t_sizes = _pareto(rng, r, a, n_t)
        drift_t = a * spec.c_alpha * r ** (1.0 - a) / (1.0 - a)
        if spec.regime == "independent":
            b = spec.beta
            n_s = rng.poisson(spec.total * r ** (-b) * horizon)
            s_times = rng.random(n_s) * horizon
            s_sizes = _pareto(rng, r, b, n_s)
            s_sizes *= np.where(rng.random(n_s) < spec.c_plus / spec.total, 1.0, -1.0)
            drift_s = _s_compensation(b, spec.c_plus, spec.c_minus, r)
            var = _small_jump_variance(b, spec.total, r) if (spec.small_jump_gaussian and b >= 1.0) else 0.0
        else:
            n_s = 0
            s_times = np.empty(0)
            s_sizes = np.empty(0)
            drift_s = 0.0
            var = spec.sigma**2
        times = np.concatenate((s_times, t_times))
        ds = np.concatenate((s_sizes, np.zeros(n_t)))
        dt = np.concatenate((np.zeros(n_s), t_sizes))
    else:
        b = spec.beta
        r1 = min(r, float(spec.rho_inverse(r)))
        n = rng.poisson(spec.total * r1 ** (-b) * horizon)
        times = rng.random(n) * horizon
        ds = _pareto(rng, r1, b, n)
        ds *= np.where(rng.random(n) < spec.c_plus / spec.total, 1.0, -1.0)
        dt = spec.rho(ds)
        ex = b / a - b
        drift_t = spec.coupling_constant * spec.total * b * r1**ex / ex
        drift_s = _s_compensation(b, spec.c_plus, spec.c_minus, r1)
        var = _small_jump_variance(b, spec.total, r1) if (spec.small_jump_gaussian and b >= 1.0) else 0.0
    order = np.argsort(times, kind="stable")
    if var > 0:
        step = spec.grid_step
        gauss = _gaussian_grid(rng, horizon, step, var)
    return LevyPairPath(times[order], ds[order], dt[order], float(drift_s), float(drift_t),
                        float(horizon), spec.regime, step, gauss)


def concatenate(first: LevyPairPath, second: LevyPairPath) -> LevyPairPath:
    """Path on ``[0, h1 + h2]`` made of ``first`` followed by an independent ``second``."""
    if (first.drift_s, first.drift_t) != (second.drift_s, second.drift_t):
        raise ParameterError("only paths from the same spec can be joined")
    h1 = first.horizon
    gauss = None
    if first.gauss_values is not None:
        if second.gauss_values is None or first.gauss_step != second.gauss_step:
            raise ParameterError("mismatched Gaussian grids")
        if not math.isclose(h1 / first.gauss_step, round(h1 / first.gauss_step)):
            raise ParameterError("horizon must be a whole number of grid steps to join")
        gauss = np.concatenate((first.gauss_values, first.gauss_values[-1] + second.gauss_values[1:]))
    return LevyPairPath(np.concatenate((first.jump_times, second.jump_times + h1)),
                        np.concatenate((first.jump_s, second.jump_s)),
                        np.concatenate((first.jump_t, second.jump_t)),
                        first.drift_s, first.drift_t, h1 + second.horizon, first.regime,
                        first.gauss_step, gauss)


def sample_covering_path(spec: LimitSpec, t: float, rng, block: float = 1.0) -> LevyPairPath:
    """Path extended block by block until ``T(horizon) > t``."""
    path = sample_levy_pair(spec, block, rng)
    while path.T_end <= t:
        path = concatenate(path, sample_levy_pair(spec, block, rng))
    return path


def right_inverse(path: LevyPairPath, t):
    return path.right_inverse(t)


def zeta(path: LevyPairPath, t):
    return path.zeta(t)


def zeta_minus(path: LevyPairPath, t):
    return path.zeta_minus(t)


def sample_zeta(spec: LimitSpec, t: float, n: int, rng, minus: bool = False) -> np.ndarray:
    """``n`` independent draws of ``zeta_t`` (or ``zeta^-_t``)."""
    out = np.empty(n)
    block = max(1.0, spec.grid_step)
    for i in range(n):
        path = sample_covering_path(spec, t, rng, block)
        out[i] = path.zeta_minus(t) if minus else path.zeta(t)
    return out


def scale_invariance_sample(spec: LimitSpec, t0: float, a: float, n_replicas: int, rng,
                            minus: bool = False):
    """Independent draws of ``zeta_{a t0}`` and ``a^(alpha/beta) zeta_{t0}``."""
    if a <= 0 or t0 <= 0:
        raise ParameterError("a and t0 must be positive")
    first = sample_zeta(spec, a * t0, n_replicas, rng, minus)
    second = sample_zeta(spec, t0, n_replicas, rng, minus) * a ** (spec.alpha / spec.beta)
    return first, second

"""Stable laws parametrized by their tail constants.

A law with index ``b`` in (0, 2) and tail constants ``c_plus``, ``c_minus``
has Levy measure ``b * c(l) * |l|**(-1-b) dl`` where ``c(l)`` is ``c_plus`` for
positive ``l`` and ``c_minus`` for negative ``l``; equivalently
``nu((x, inf)) = c_plus * x**-b``.  The characteristic exponent uses the
compensation that matches the limit theorems for partial sums:

* ``b < 1``: none (``e^{i l xi} - 1``),
* ``b == 1``: truncation on ``[-1, 1]``,
* ``1 < b < 2``: full compensation, so the law has mean zero.

Index 2 is the centred Gaussian with variance ``c_plus + c_minus``.

Internally every law is mapped onto the standard S1 form
``exp(-sigma^b |xi|^b (1 - i skew sgn(xi) tan(pi b / 2)) + i mu xi)``:

    sigma^b = Gamma(1 - b) (c_plus + c_minus) cos(pi b / 2)      (b != 1)
    sigma   = (c_plus + c_minus) pi / 2                          (b == 1)
    skew    = (c_plus - c_minus) / (c_plus + c_minus)
    mu      = (c_plus - c_minus) (1 - euler_gamma)               (b == 1)

The ``b == 1`` shift comes from the ``[-1, 1]`` truncation convention rather
than the usual logarithmic centring.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .errors import NumericalError, ParameterError

CDF_TOL = 1e-6
_ENVELOPE = 1e-12


@dataclass(frozen=True)
class StableSpec:
    """Index and tail constants of a stable law.

    ``centered`` must be true for indices in (1, 2); it carries no
    information for other indices.
    """

    index: float
    c_plus: float = 1.0
    c_minus: float = 0.0
    centered: bool = True

    def __post_init__(self):
        b = float(self.index)
        if not (0.0 < b <= 2.0) or not math.isfinite(b):
            raise ParameterError(f"stable index must lie in (0, 2], got {self.index!r}")
        if self.c_plus < 0 or self.c_minus < 0:
            raise ParameterError("tail constants must be nonnegative")
        if self.c_plus + self.c_minus <= 0:
            raise ParameterError("at least one tail constant must be positive")
        if 1.0 < b < 2.0 and not self.centered:
            raise ParameterError("indices in (1, 2) require a centred law")

    @classmethod
    def gaussian(cls, variance=1.0):
        return cls(2.0, variance / 2.0, variance / 2.0)

    @classmethod
    def one_sided(cls, index, c=1.0):
        return cls(index, c, 0.0)

    @classmethod
    def symmetric(cls, index, c=1.0):
        """Symmetric law with ``c_plus = c_minus = c``."""
        return cls(index, c, c)

    @property
    def total(self):
        return self.c_plus + self.c_minus

    @property
    def is_gaussian(self):
        return self.index == 2.0

    @property
    def is_one_sided(self):
        return self.index < 1.0 and self.c_minus == 0.0

    @property
    def variance(self):
        if not self.is_gaussian:
            return math.inf
        return self.total

    @property
    def skewness(self):
        if self.is_gaussian:
            return 0.0
        return (self.c_plus - self.c_minus) / self.total

    @property
    def scale(self):
        """S1 scale parameter ``sigma`` (standard deviation / sqrt 2 for index 2)."""
        b = self.index
        if b == 2.0:
            return math.sqrt(self.total / 2.0)
        if b == 1.0:
            return self.total * math.pi / 2.0
        return (math.gamma(1.0 - b) * self.total * math.cos(math.pi * b / 2.0)) ** (1.0 / b)

    @property
    def shift(self):
        if self.index == 1.0:
            return (self.c_plus - self.c_minus) * (1.0 - np.euler_gamma)
        return 0.0

    def exponent(self, xi):
        """Characteristic exponent ``psi`` with ``E exp(i xi X) = exp(psi(xi))``."""
        xi = np.asarray(xi, dtype=float)
        b = self.index
        ax = np.abs(xi)
        if b == 2.0:
            return (-0.5 * self.total * xi**2).astype(complex)
        diff = self.c_plus - self.c_minus
        if b == 1.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                xlog = np.where(ax > 0, xi * np.log(np.where(ax > 0, ax, 1.0)), 0.0)
            return -self.total * (math.pi / 2.0) * ax - 1j * diff * xlog + 1j * self.shift * xi
        g = math.gamma(1.0 - b)
        re = -g * self.total * math.cos(math.pi * b / 2.0) * ax**b
        im = g * diff * math.sin(math.pi * b / 2.0) * np.sign(xi) * ax**b
        return re + 1j * im

    def characteristic_function(self, xi):
        return np.exp(self.exponent(xi))


def _check_rng(rng):
    if not isinstance(rng, np.random.Generator):
        raise ParameterError("rng must be a numpy.random.Generator")


def sample_stable(spec, rng, size=None):
    """Draw from the stable law of ``spec`` by Chambers-Mallows-Stuck.

    One uniform angle and one unit exponential per draw; no rejection.
    Returns a float when ``size`` is None.
    """
    _check_rng(rng)
    b = spec.index
    if b == 2.0:
        out = rng.normal(0.0, math.sqrt(spec.variance), size=size)
        return float(out) if size is None else out

    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=size)
    w = rng.standard_exponential(size=size)
    beta = spec.skewness
    sigma = spec.scale
    if b == 1.0:
        half_pi = math.pi / 2.0
        bu = half_pi + beta * u
        x = (bu * np.tan(u) - beta * np.log(half_pi * w * np.cos(u) / bu)) / half_pi
        out = sigma * x + (2.0 / math.pi) * beta * sigma * math.log(sigma) + spec.shift
    else:
        t = beta * math.tan(math.pi * b / 2.0)
        shift = math.atan(t) / b
        stretch = (1.0 + t * t) ** (1.0 / (2.0 * b))
        x = (
            stretch
            * np.sin(b * (u + shift))
            / np.cos(u) ** (1.0 / b)
            * (np.cos(u - b * (u + shift)) / w) ** ((1.0 - b) / b)
        )
        out = sigma * x
    if spec.is_one_sided:
        # cos(u) underflow at u -> -pi/2 can round a tiny draw to 0.0
        out = np.maximum(out, np.finfo(float).tiny)
    return float(out) if size is None else out


def _decay_rate(spec):
    """``A`` such that ``|phi(u)| = exp(-A u^index)``."""
    b = spec.index
    if b == 2.0:
        return spec.total / 2.0
    if b == 1.0:
        return spec.total * math.pi / 2.0
    return math.gamma(1.0 - b) * spec.total * math.cos(math.pi * b / 2.0)


def _cutoff(spec, envelope=_ENVELOPE):
    return (-math.log(envelope) / _decay_rate(spec)) ** (1.0 / spec.index)


def _quad(f, a, b, *, epsabs, diag, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=0.0, limit=400, **kw)
        except integrate.IntegrationWarning as exc:
            diag.setdefault("warnings", []).append(str(exc).splitlines()[0])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=0.0, limit=2000, **kw)
    diag["abserr"] = diag.get("abserr", 0.0) + err
    return val


def _gil_pelaez(spec, x, epsabs, envelope=_ENVELOPE):
    """Return ``int_0^inf Im(exp(-iux) phi(u)) / u du`` and its diagnostics."""
    diag = {"x": x, "index": spec.index}
    umax = _cutoff(spec, envelope)
    diag["cutoff"] = umax

    def re_over_u(u):
        return float(np.real(np.exp(spec.exponent(u)))) / u

    def im_over_u(u):
        return float(np.imag(np.exp(spec.exponent(u)))) / u

    def integrand(u):
        if u == 0.0:
            return 0.0
        val = np.exp(spec.exponent(u) - 1j * u * x)
        return float(val.imag) / u

    ax = abs(x)
    if ax * umax <= 400.0 * math.pi:
        width = math.pi / ax if ax > 0 else umax / 8.0
        edges = np.arange(0.0, umax, width)
        edges = np.append(edges, umax)
        # finer first panel for the u^(index-1) singularity at the origin
        if len(edges) > 2:
            edges = np.insert(edges, 1, edges[1] * 1e-3)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += _quad(integrand, a, b, epsabs=epsabs / len(edges), diag=diag)
        return total, diag

    return _gil_pelaez_rotated(spec, x, umax, epsabs, diag), diag


def _exponent_complex(spec, u):
    """Analytic continuation of the exponent into the right half-plane."""
    b = spec.index
    if b == 2.0:
        return -0.5 * spec.total * u * u
    if b == 1.0:
        diff = spec.c_plus - spec.c_minus
        return -spec.total * (math.pi / 2.0) * u - 1j * diff * u * np.log(u) + 1j * spec.shift * u
    return complex(spec.exponent(1.0)) * u**b


def _gil_pelaez_rotated(spec, x, radius, epsabs, diag):
    """Same integral with the ray [0, R] swung into the half-plane where
    ``exp(-iux)`` decays, closed by an arc at radius ``R``.

    The integrand is made analytic by subtracting ``exp(-|x| u) / u``, which
    is real on the positive axis and so leaves the imaginary part unchanged.
    """
    sgn = 1.0 if x > 0 else -1.0
    s = abs(x)

    def log_mod(u):
        return (_exponent_complex(spec, u) - 1j * u * x).real

    theta = math.pi / 4.0
    probe_r = np.geomspace(radius * 1e-9, radius, 80)
    while True:
        angles = np.linspace(0.0, theta, 33)
        pts = probe_r[:, None] * np.exp(-1j * sgn * angles)[None, :]
        if np.all(log_mod(pts) <= 1e-12):
            break
        theta /= 2.0
        if theta < 1e-4:
            raise NumericalError("no admissible rotation angle for the inversion contour", diagnostic=diag)
    # stay strictly inside the admissible sector
    theta /= 2.0
    diag["rotation"] = theta
    rot = np.exp(-1j * sgn * theta)

    def g(u):
        return (np.exp(_exponent_complex(spec, u) - 1j * u * x) - np.exp(-s * u)) / u

    def ray(v):
        if v == 0.0:
            return 0.0
        return float((g(v * rot) * rot).imag)

    def arc(phi):
        u = radius * np.exp(-1j * sgn * phi)
        return float((g(u) * (1j * sgn * u)).imag)

    scale = 1.0 / (s * min(math.sin(theta), math.cos(theta)))
    reach = min(radius, 60.0 * scale)
    edges = np.concatenate(([0.0], np.geomspace(scale * 1e-6, reach, 40)))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _quad(ray, lo, hi, epsabs=epsabs / 80.0, diag=diag)
    if reach < radius:
        total += _quad(ray, reach, radius, epsabs=epsabs / 80.0, diag=diag)
    # arc runs from angle theta back to the real axis
    total += _quad(arc, theta, 0.0, epsabs=epsabs / 80.0, diag=diag)
    return total


def evaluate_stable_cdf(spec, x, *, tol=CDF_TOL):
    """Distribution function of ``spec`` at ``x`` by Gil-Pelaez inversion.

    The characteristic function is integrated up to the point where its
    modulus drops below 1e-12.  Raises :class:`NumericalError` when the
    quadrature error estimate exceeds ``tol``.
    """
    x = float(x)
    if not math.isfinite(x):
        return 1.0 if x > 0 else 0.0
    if spec.is_one_sided and x <= 0.0:
        return 0.0
    integral, diag = _gil_pelaez(spec, x, epsabs=tol / 50.0)
    if diag.get("abserr", 0.0) > tol * math.pi:
        raise NumericalError(
            f"stable CDF quadrature did not converge at x={x}", diagnostic=diag
        )
    value = 0.5 - integral / math.pi
    return min(1.0, max(0.0, value))


@lru_cache(maxsize=64)
def _cdf_table(spec, n_points):
    s = spec.scale
    b = spec.index
    if spec.is_one_sided:
        left = min(60.0, 10.0 * (1.0 - b) / b + 5.0)
        right = math.log((spec.total / 1e-7) ** (1.0 / b) / s) + 2.0
        y = np.linspace(-left, right, n_points)
        xs = s * np.exp(y)
    else:
        if spec.is_gaussian:
            reach = 12.0
        else:
            reach = min((spec.total / 1e-7) ** (1.0 / b) / s, 1e15)
        ymax = math.asinh(reach)
        y = np.linspace(-ymax, ymax, n_points)
        xs = s * np.sinh(y)
    fs = np.array([evaluate_stable_cdf(spec, float(x)) for x in xs])
    fs = np.maximum.accumulate(fs)
    return xs, fs


class StableCDF:
    """Vectorized distribution function backed by a cached inversion table.

    Values between table nodes come from monotone cubic interpolation in the
    table's own coordinate; beyond the table the power-law tail is used.
    """

    def __init__(self, spec, n_points=1200):
        self.spec = spec
        self.xs, self.fs = _cdf_table(spec, n_points)
        if spec.is_one_sided:
            self._coord = np.log
        else:
            s = spec.scale
            self._coord = lambda x: np.arcsinh(np.asarray(x) / s)
        self._interp = PchipInterpolator(self._coord(self.xs), self.fs, extrapolate=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        spec = self.spec
        lo, hi = self.xs[0], self.xs[-1]
        b = spec.index
        inside = (x >= lo) & (x <= hi)
        if spec.is_one_sided:
            inside &= x > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[inside] = self._interp(self._coord(x[inside]))
        above = x > hi
        below = ~inside & ~above
        if spec.is_gaussian:
            out[above] = 1.0
            out[below] = 0.0
        else:
            out[above] = 1.0 - (1.0 - self.fs[-1]) * (hi / x[above]) ** b
            if spec.is_one_sided or spec.c_minus == 0.0:
                out[below] = np.where(x[below] <= 0, 0.0, self.fs[0]) if spec.is_one_sided else 0.0
            else:
                out[below] = self.fs[0] * (lo / x[below]) ** b
        return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=64)
def stable_cdf(spec):
    """Cached :class:`StableCDF` for ``spec``."""
    return StableCDF(spec)


def tail_constant_check(spec, lambda_grid, side="right"):
    """Products ``lambda^index * P(X >= lambda)`` (or ``P(X <= -lambda)``).

    These should settle at ``c_plus`` (``c_minus`` on the left) as lambda
    grows; for the Gaussian they vanish.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("lambda_grid must be positive and increasing")
    out = []
    for lam in grid:
        if side == "right":
            tail = 1.0 - evaluate_stable_cdf(spec, lam)
        elif side == "left":
            tail = evaluate_stable_cdf(spec, -lam)
        else:
            raise ParameterError(f"side must be 'right' or 'left', got {side!r}")
        out.append((float(lam), float(lam**spec.index * tail)))
    return out


def levy_distribution_cdf(x, c=1.0):
    """Closed-form CDF of the one-sided index-1/2 law with tail constant ``c``.

    That law is the Levy distribution with scale ``pi c^2 / 2``.
    """
    x = np.asarray(x, dtype=float)
    scale = math.pi * c * c / 2.0
    with np.errstate(divide="ignore"):
        return np.where(x > 0, special.erfc(np.sqrt(scale / (2.0 * np.where(x > 0, x, 1.0)))), 0.0)

"""Goodness-of-fit distances, tail-index and scaling-exponent estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import ParameterError

KS_CRIT_1PCT = 1.63  # asymptotic Kolmogorov quantile at the 1% level


def ks_critical(n, m=None):
    """1% critical value: ``1.63/sqrt(n)``, or ``1.63 sqrt((n+m)/(n m))`` for two samples."""
    if m is None:
        return KS_CRIT_1PCT / math.sqrt(n)
    return KS_CRIT_1PCT * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True, eq=False)
class SampleVector:
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ParameterError("sample contains NaN or infinite values")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _values(sample):
    return sample.values if isinstance(sample, SampleVector) else SampleVector(sample).values


def ks_to_reference(sample, cdf, min_size=100):
    """Sup distance between the ECDF and ``cdf``, checked on both sides of every sample point."""
    x = _values(sample)
    if x.size < min_size:
        raise ParameterError(f"need at least {min_size} points")
    return float(sps.ks_1samp(x, cdf, method="asymp").statistic)


def ks_two_sample(a, b):
    return float(sps.ks_2samp(_values(a), _values(b), method="asymp").statistic)


def hill_estimator(sample, k_fraction=0.01, n_boot=200, rng=None):
    """Hill estimate of the tail index from the top ``k`` order statistics.

    Returns ``(estimate, bootstrap standard error, k)``.
    """
    x = _values(sample)
    if np.any(x <= 0):
        raise ParameterError("Hill estimator needs a positive sample")
    if not 0.0 < k_fraction <= 0.2:
        raise ParameterError("k_fraction must lie in (0, 0.2]")
    k = int(k_fraction * x.size)
    if k < 10:
        raise ParameterError("too few exceedances for a tail estimate")
    estimate = _hill(np.sort(x), k)
    se = float("nan")
    if n_boot > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        boots = np.empty(n_boot)
        for b in range(n_boot):
            boots[b] = _hill(np.sort(rng.choice(x, x.size, replace=True)), k)
        se = float(boots.std(ddof=1))
    return estimate, se, k


def _hill(sorted_x, k):
    top = np.log(sorted_x[-k:])
    threshold = math.log(sorted_x[-k - 1])
    return float(1.0 / np.mean(top - threshold))


def interquartile_range(values):
    q75, q25 = np.percentile(_values(values), [75, 25])
    return float(q75 - q25)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    stderr: float
    ci_low: float
    ci_high: float
    intercept: float


def scaling_exponent(pairs, confidence=0.95):
    """Least-squares slope of ``log(spread)`` against ``log(N)``."""
    ns = np.array([p[0] for p in pairs], dtype=float)
    spreads = np.array([p[1] for p in pairs], dtype=float)
    if np.unique(ns).size < 3:
        raise ParameterError("need at least three distinct N")
    if np.any(spreads <= 0) or np.any(ns <= 0):
        raise ParameterError("spreads and N must be positive")
    fit = sps.linregress(np.log(ns), np.log(spreads))
    dof = ns.size - 2
    if dof > 0 and np.isfinite(fit.stderr):
        half = sps.t.ppf(0.5 + confidence / 2, dof) * fit.stderr
    else:
        half = float("nan")
    return ScalingFit(float(fit.slope), float(fit.stderr), float(fit.slope - half),
                      float(fit.slope + half), float(fit.intercept))


def joint_tail_exponent(taus, vs, thresholds):
    """Slope of ``log P(tau > u, |V| > u)`` against ``log u`` together with the hit counts."""
    taus = np.asarray(taus)
    vs = np.abs(np.asarray(vs))
    thresholds = np.asarray(thresholds, dtype=float)
    counts = np.array([np.count_nonzero((taus > u) & (vs > u)) for u in thresholds])
    keep = counts > 0
    if keep.sum() < 2:
        return float("inf"), counts
    fit = sps.linregress(np.log(thresholds[keep]), np.log(counts[keep] / taus.size))
    return float(-fit.slope), counts

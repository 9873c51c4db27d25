import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from ctrwlimits.errors import ParameterError
from ctrwlimits.stats import (SampleVector, hill_estimator, interquartile_range, joint_tail_exponent,
                              ks_critical, ks_to_reference, ks_two_sample, scaling_exponent)


def test_ks_critical_values():
    assert ks_critical(10_000) == pytest.approx(0.0163)
    assert ks_critical(10_000, 10_000) == pytest.approx(1.63 * math.sqrt(2e-4))


def test_sample_vector_rejects_nonfinite():
    with pytest.raises(ParameterError):
        SampleVector([1.0, np.nan])
    with pytest.raises(ParameterError):
        ks_to_reference([1.0, np.inf] * 100, sps.norm.cdf)
    assert len(SampleVector(np.ones((3, 4)))) == 12


def test_ks_reference_matches_brute_force():
    x = np.random.default_rng(0).normal(size=500)
    xs = np.sort(x)
    F = sps.norm.cdf(xs)
    i = np.arange(1, xs.size + 1)
    brute = max(np.max(i / xs.size - F), np.max(F - (i - 1) / xs.size))
    assert ks_to_reference(x, sps.norm.cdf) == pytest.approx(brute, abs=1e-15)


def test_ks_min_size():
    with pytest.raises(ParameterError):
        ks_to_reference(np.zeros(50), sps.norm.cdf)


def test_ks_two_sample_brute_force():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=300), rng.normal(0.2, size=400)
    grid = np.concatenate([a, b])
    brute = np.max(np.abs((a[:, None] <= grid).mean(0) - (b[:, None] <= grid).mean(0)))
    assert ks_two_sample(a, b) == pytest.approx(brute)


@pytest.mark.parametrize("index", [0.5, 1.0, 1.5])
def test_hill_on_exact_pareto(index):
    rng = np.random.default_rng(2)
    x = (1 - rng.random(200_000)) ** (-1 / index)
    est, se, k = hill_estimator(x, 0.01, n_boot=100, rng=rng)
    assert k == 2000
    assert abs(est - index) <= 4 * se


def test_hill_errors():
    with pytest.raises(ParameterError):
        hill_estimator([-1.0] * 1000)
    with pytest.raises(ParameterError):
        hill_estimator(np.ones(1000) + np.arange(1000), 0.5)
    with pytest.raises(ParameterError):
        hill_estimator(np.arange(1, 100.0), 0.01)


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0), st.floats(0.01, 100.0))
def test_hill_scale_invariant(index, power, scale):
    x = (1 - np.random.default_rng(3).random(5000)) ** (-1 / index)
    a = hill_estimator(x, 0.02, n_boot=0)[0]
    b = hill_estimator(x * scale, 0.02, n_boot=0)[0]
    assert a == pytest.approx(b, rel=1e-9)


def test_iqr():
    assert interquartile_range(np.arange(101.0)) == 50.0


def test_scaling_exponent_exact_power_law():
    fit = scaling_exponent([(n, 3.0 * n ** 0.75) for n in (256, 1024, 4096, 16384)])
    assert fit.slope == pytest.approx(0.75, abs=1e-12)
    assert fit.ci_low <= 0.75 <= fit.ci_high
    assert fit.intercept == pytest.approx(math.log(3.0))


def test_scaling_exponent_needs_three_n():
    with pytest.raises(ParameterError):
        scaling_exponent([(256, 1.0), (1024, 2.0), (1024, 2.1)])
    with pytest.raises(ParameterError):
        scaling_exponent([(1, 1.0), (2, 0.0), (3, 1.0)])


def test_joint_tail_exponent_independent_pareto():
    rng = np.random.default_rng(4)
    n = 2_000_000
    tau = (1 - rng.random(n)) ** -2.0
    v = (1 - rng.random(n)) ** -2.0
    gamma, counts = joint_tail_exponent(tau, v, [10.0, 30.0, 100.0])
    # P(tau > u, |V| > u) = u^-1
    assert abs(gamma - 1.0) < 0.05
    assert np.all(np.diff(counts) < 0)


def test_joint_tail_exponent_degenerate():
    gamma, counts = joint_tail_exponent(np.ones(10), np.ones(10), [5.0, 6.0])
    assert gamma == math.inf and list(counts) == [0, 0]

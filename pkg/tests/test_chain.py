import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctrwlimits.chain import (FiniteChain, asymptotic_variance, builtin_chain, coupling_constant,
                              doubled_bracket_variance, martingale_decomposition_check,
                              neumann_series, partial_sum_variance, random_finite_chain,
                              sample_finite_path, solve_poisson, spectral_gap,
                              stationary_distribution, tail_domination_ratio)
from ctrwlimits.errors import ParameterError, StructuralError
from ctrwlimits.stats import hill_estimator


def two_state(p):
    return FiniteChain.from_matrix([[p, 1 - p], [1 - p, p]], tau=[1.0, 2.0], v=[1.0, -1.0])


def iid_chain(pi, v):
    pi = np.asarray(pi, float)
    P = np.tile(pi, (pi.size, 1))
    v = np.asarray(v, float)
    return FiniteChain(list(range(pi.size)), P, pi, np.ones(pi.size), v - pi @ v)


def test_rejects_non_stochastic():
    with pytest.raises(ParameterError):
        FiniteChain.from_matrix([[0.5, 0.6], [0.5, 0.5]], [1, 1], [0, 0])


def test_rejects_non_invariant_pi():
    with pytest.raises(ParameterError):
        FiniteChain([0, 1], np.array([[0.9, 0.1], [0.5, 0.5]]), np.array([0.5, 0.5]), [1, 1], [0, 0])


def test_iid_chain_gap_zero():
    assert spectral_gap(iid_chain([0.2, 0.3, 0.5], [1, 2, 3])) < 1e-12


@pytest.mark.parametrize("p", [0.0, 0.1, 0.3, 0.5, 0.8, 0.95])
def test_two_state_gap_matches_eigenvalue(p):
    oracle = sorted(abs(np.linalg.eigvals(two_state(p).transition)))[0]
    assert abs(spectral_gap(two_state(p)) - abs(2 * p - 1)) < 1e-12
    assert abs(spectral_gap(two_state(p)) - oracle) < 1e-12


def test_identity_gap_one():
    chain = FiniteChain([0, 1, 2], np.eye(3), np.ones(3) / 3, np.ones(3), [1.0, -1.0, 0.0])
    assert abs(spectral_gap(chain) - 1.0) < 1e-12
    with pytest.raises(StructuralError):
        solve_poisson(chain)


def test_poisson_iid_returns_v():
    chain = iid_chain([0.2, 0.3, 0.5], [1.0, 4.0, -2.0])
    assert np.allclose(solve_poisson(chain), chain.v, atol=1e-12)


def test_poisson_zero_v():
    chain = iid_chain([0.5, 0.5], [0.0, 0.0])
    assert np.all(solve_poisson(chain) == 0)


def test_poisson_rejects_uncentred():
    chain = random_finite_chain(4, np.random.default_rng(1))
    with pytest.raises(ParameterError):
        solve_poisson(chain, chain.v + 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_poisson_matches_neumann(seed):
    chain = random_finite_chain(5, np.random.default_rng(seed))
    chi = solve_poisson(chain)
    assert np.max(np.abs(chi - chain.transition @ chi - chain.v)) <= 1e-10
    assert abs(chain.mean(chi)) <= 1e-12
    assert np.max(np.abs(chi - neumann_series(chain, n_terms=200))) <= 1e-8


@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=10_000))
def test_random_chain_properties(k, seed):
    chain = random_finite_chain(k, np.random.default_rng(seed))
    assert abs(chain.mean(chain.v)) <= 1e-12
    assert np.max(np.abs(chain.pi @ chain.transition - chain.pi)) <= 1e-10
    assert 0.0 <= spectral_gap(chain) < 1.0
    assert np.min(chain.tau) >= 0.1


def test_stationary_distribution_two_state():
    pi = stationary_distribution(np.array([[0.9, 0.1], [0.3, 0.7]]))
    assert np.allclose(pi, [0.75, 0.25], atol=1e-14)


def test_martingale_identity_iid():
    chain = iid_chain([0.25, 0.75], [3.0, -1.0])
    out = martingale_decomposition_check(chain, 100, np.random.default_rng(0))
    assert out.max_conditional_mean <= 1e-12


def test_martingale_three_state_telescoping():
    chain = random_finite_chain(3, np.random.default_rng(2))
    out = martingale_decomposition_check(chain, 1000, np.random.default_rng(3))
    assert out.max_conditional_mean <= 1e-10
    assert out.telescoping_error <= 1e-9


def test_asymptotic_variance_iid_is_variance():
    chain = iid_chain([0.25, 0.75], [3.0, -1.0])
    assert abs(asymptotic_variance(chain) - chain.norm2(chain.v)) < 1e-12


def test_asymptotic_variance_two_state_closed_form():
    # covariances (2p-1)^n give variance (1 + r)/(1 - r) with r = 2p - 1
    p = 0.7
    r = 2 * p - 1
    assert abs(asymptotic_variance(two_state(p)) - (1 + r) / (1 - r)) < 1e-12


def test_partial_sum_variance_approaches_asymptotic():
    chain = random_finite_chain(4, np.random.default_rng(8))
    n = 20_000
    assert abs(partial_sum_variance(chain, n) / n - asymptotic_variance(chain)) < 1e-3


def test_doubled_bracket_differs_from_asymptotic():
    chain = random_finite_chain(5, np.random.default_rng(7))
    assert doubled_bracket_variance(chain) > 0
    assert doubled_bracket_variance(chain) != pytest.approx(asymptotic_variance(chain))


def test_sample_path_frequencies():
    chain = two_state(0.8)
    idx = sample_finite_path(chain, 200_000, np.random.default_rng(4), start=0)
    assert abs(np.mean(idx == 0) - 0.5) < 0.01
    assert idx[0] == 0


def test_json_round_trip(tmp_path):
    chain = random_finite_chain(4, np.random.default_rng(11))
    path = tmp_path / "c.json"
    chain.to_json(str(path))
    back = FiniteChain.from_json(str(path))
    assert np.array_equal(back.transition, chain.transition)
    assert np.array_equal(back.v, chain.v)
    doc = json.loads(chain.to_json())
    doc["schema"] = "other/1"
    with pytest.raises(ParameterError):
        FiniteChain.from_dict(doc)


def test_tail_domination_ratio():
    chain = FiniteChain.from_matrix([[0.5, 0.5], [0.5, 0.5]], tau=[1.0, 5.0], v=[1.0, -1.0])
    Pa = chain.transition * 0.8
    worst, detail = tail_domination_ratio(chain, Pa, [0.5, 2.0])
    assert worst == pytest.approx(0.25)
    assert len(detail) == 2
    worst, _ = tail_domination_ratio(chain, np.zeros((2, 2)), [2.0])
    assert worst == np.inf


def test_coupling_constant_conventions():
    assert coupling_constant(0.5, 1.0, 1.0, 0.0) == 1.0
    assert coupling_constant(0.5, 1.0, 1.0, 0.0, convention="ratio") == 1.0
    assert coupling_constant(0.5, 1.0, 1.0, 1.0) == pytest.approx(0.25)
    assert coupling_constant(0.5, 1.0, 1.0, 1.0, convention="ratio") == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        coupling_constant(0.5, 1.0, 1.0, 1.0, convention="nope")


def test_iid_pareto_tau_tail_index():
    model = builtin_chain("iid_pareto", alpha=0.5)
    taus, _ = model.sample_observables(100_000, np.random.default_rng(0))
    est, _, _ = hill_estimator(taus, 0.01, n_boot=0)
    assert 0.45 <= est <= 0.55
    assert taus.min() >= model.t_star


def test_iid_pareto_lower_bound_large_sample():
    model = builtin_chain("iid_pareto", alpha=0.5)
    taus, _ = model.sample_observables(1_000_000, np.random.default_rng(1))
    assert taus.min() >= model.t_star


def test_iid_coupled_exact_relation():
    model = builtin_chain("iid_coupled", alpha=0.5, beta=0.5, c_alpha=1.0, c_plus=1.0, c_minus=0.0)
    assert model.params["coupling"] == 1.0
    taus, vs = model.sample_observables(10_000, np.random.default_rng(2))
    assert np.all(taus == model.t_star + model.coupling(vs))


def test_finite_random_centred():
    model = builtin_chain("finite_random", k=5, seed=3)
    assert abs(model.finite.mean(model.finite.v)) <= 1e-12


def test_unknown_builtin():
    with pytest.raises(ParameterError):
        builtin_chain("nope")


@pytest.mark.parametrize("kw", [dict(alpha=1.2), dict(beta=2.5), dict(c_alpha=0.0), dict(t_star=0.0)])
def test_iid_pareto_rejects_bad_parameters(kw):
    with pytest.raises(ParameterError):
        builtin_chain("iid_pareto", **kw)


def test_state_interface_agrees_with_sampler():
    model = builtin_chain("finite_random", k=3, seed=1)
    states = model.sample_states(50, np.random.default_rng(0))
    assert all(0 <= s < 3 for s in states)
    assert model.tau(states[0]) == model.finite.tau[states[0]]

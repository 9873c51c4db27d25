import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctrwlimits.chain import ChainModel, builtin_chain
from ctrwlimits.ctrw import (CtrwTrajectory, counting_process, ctrw_at_time, ctrw_interpolated,
                             ctrw_value, interpolated_scaled_path, scale, scaled_endpoint,
                             simulate_trajectory, simulate_until, truncated_mean)
from ctrwlimits.errors import ParameterError, RangeError
from ctrwlimits.stable_laws import StableSpec, stable_cdf
from ctrwlimits.stats import ks_to_reference


def constant_chain(v=0.0):
    return ChainModel("const", step=lambda x, r: x, initial=lambda r: 0, tau=lambda x: 1.0,
                      v=lambda x: v, t_star=1.0)


def test_degenerate_chain():
    traj = simulate_trajectory(constant_chain(), 5, np.random.default_rng(0))
    assert np.array_equal(traj.renewal_times, np.arange(6.0))
    assert np.all(traj.partial_sums == 0)


def test_counting_process_examples():
    traj = simulate_trajectory(constant_chain(1.0), 5, np.random.default_rng(0))
    assert counting_process(traj, 0.0) == 0
    assert counting_process(traj, 2.5) == 2
    assert ctrw_value(traj, 2.5) == 2.0
    assert ctrw_interpolated(traj, 2.5) == 2.5
    with pytest.raises(RangeError):
        counting_process(traj, 5.0)
    with pytest.raises(RangeError):
        counting_process(traj, -0.1)


def test_counting_process_matches_linear_scan():
    rng = np.random.default_rng(1)
    traj = simulate_trajectory(builtin_chain("iid_pareto"), 500, rng)
    ts = rng.random(1000) * traj.horizon
    fast = counting_process(traj, ts)
    for t, n in zip(ts, fast):
        brute = max(k for k in range(traj.n_steps + 1) if traj.renewal_times[k] <= t)
        assert n == brute
    assert np.all(fast <= ts / 0.1 + 1)


def test_renewal_instants_and_bound():
    rng = np.random.default_rng(2)
    traj = simulate_trajectory(builtin_chain("iid_pareto", beta=1.5), 300, rng)
    k = np.arange(traj.n_steps)
    tk = traj.renewal_times[:-1]
    assert np.array_equal(counting_process(traj, tk), k)
    assert np.array_equal(ctrw_value(traj, tk), traj.partial_sums[:-1])
    assert np.array_equal(ctrw_interpolated(traj, tk), traj.partial_sums[:-1])
    ts = rng.random(1000) * traj.horizon
    gap = np.abs(ctrw_interpolated(traj, ts) - ctrw_value(traj, ts))
    assert np.all(gap <= np.abs(traj.jump_values[counting_process(traj, ts)]) + 1e-12)


def test_coupled_trajectory_relation():
    model = builtin_chain("iid_coupled")
    traj = simulate_trajectory(model, 1000, np.random.default_rng(3))
    taus = np.diff(traj.renewal_times)
    vs = np.diff(traj.partial_sums)
    assert np.allclose(taus, model.t_star + model.coupling(vs), rtol=1e-12)


def test_pareto_renewal_bulk():
    # each run lands in the 1%-99% bulk with probability 0.98; check the rate over many runs
    cdf = stable_cdf(StableSpec.one_sided(0.5))
    model = builtin_chain("iid_pareto")
    rng = np.random.default_rng(4)
    x = np.array([simulate_trajectory(model, 10_000, rng).renewal_times[-1] / 1e4 ** 2 for _ in range(200)])
    u = cdf(x)
    assert np.mean((u >= 0.01) & (u <= 0.99)) >= 0.94


def test_reproducible():
    a = simulate_trajectory(builtin_chain("iid_pareto"), 100, np.random.default_rng(9))
    b = simulate_trajectory(builtin_chain("iid_pareto"), 100, np.random.default_rng(9))
    assert np.array_equal(a.renewal_times, b.renewal_times)


def test_simulate_until_passes_level():
    traj = simulate_until(builtin_chain("iid_pareto"), 1e4, np.random.default_rng(5), chunk=8)
    assert traj.renewal_times[-1] > 1e4
    assert traj.renewal_times[-2] <= 1e4


def test_ctrw_at_time_constant():
    W, What, n = ctrw_at_time(constant_chain(1.0), 2.5, np.random.default_rng(0))
    assert (W, What, n) == (2.0, 2.5, 2)


def test_scale_identity():
    traj = CtrwTrajectory.from_observables([1.0, 2.0, 3.0], [1.0, -1.0, 2.0])
    pair = scale(traj, 1, 0.5, 0.5, horizon=3)
    assert pair.t_path(2.0) == 3.0
    assert pair.s_path(2.0) == 0.0
    assert pair.s_path(2.99) == 0.0
    assert pair.s_path(3.0) == 2.0


def test_scale_constant_closed_form():
    K, alpha = 64, 0.5
    traj = simulate_trajectory(constant_chain(), 2 * K, np.random.default_rng(0))
    pair = scale(traj, K, alpha, 0.5)
    for t in (0.0, 0.3, 0.77, 1.0):
        assert pair.t_path(t) == pytest.approx(K ** (1 - 1 / alpha) * np.floor(K * t) / K, rel=1e-14)


@given(st.integers(min_value=1, max_value=300), st.integers(min_value=0, max_value=10))
def test_scale_bit_exact_on_grid(K, seed):
    traj = simulate_trajectory(builtin_chain("iid_pareto", beta=1.5), K, np.random.default_rng(seed))
    pair = scale(traj, K, 0.5, 1.5)
    k = np.arange(K + 1)
    assert np.array_equal(pair.s_path(k / K), traj.partial_sums * K ** (-1 / 1.5))


def test_scale_needs_enough_steps():
    traj = simulate_trajectory(constant_chain(), 5, np.random.default_rng(0))
    with pytest.raises(RangeError):
        scale(traj, 10, 0.5, 0.5)
    with pytest.raises(ParameterError):
        scale(traj, 2, 0.5, 1.0)


def test_beta_one_centring():
    model = builtin_chain("iid_pareto", beta=1.0, c_minus=0.0)
    vn, se = truncated_mean(model, 100.0)
    assert se == 0.0
    traj = simulate_trajectory(model, 200, np.random.default_rng(1))
    pair = scale(traj, 100, 0.5, 1.0, horizon=2, v_n=vn)
    assert pair.s_path(1.0) == pytest.approx(traj.partial_sums[100] / 100 - vn)


def test_interpolated_path_nodes():
    traj = simulate_trajectory(builtin_chain("iid_pareto"), 40, np.random.default_rng(6))
    path = interpolated_scaled_path(traj, 40, 0.5)
    assert path(0.5) == pytest.approx(traj.partial_sums[20] * 40 ** -2)


def test_scaled_renewal_time_marginal():
    spec = StableSpec.one_sided(0.5)
    model = builtin_chain("iid_pareto")
    rng = np.random.default_rng(7)
    T = [scaled_endpoint(model, 2 ** 14, 0.5, 0.5, rng)[1] for _ in range(10_000)]
    assert ks_to_reference(T, stable_cdf(spec)) <= 0.02


def test_csv_exports_plain_numbers():
    traj = CtrwTrajectory.from_observables([1.0, 2.5], [0.5, -1.0])
    rows = traj.to_csv().splitlines()
    assert rows[0] == "k,t_k,S_k,V_k"
    assert rows[2] == "1,1.0,0.5,-1.0"
    pair = scale(traj, 1, 0.5, 0.5, horizon=2)
    lines = pair.to_csv().splitlines()
    assert lines[1] == "t,s,T"
    assert all("np." not in ln for ln in lines)

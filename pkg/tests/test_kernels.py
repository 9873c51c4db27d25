"""Compiled and pure-numpy kernel flavours must agree bit for bit."""

import numpy as np
from hypothesis import given, strategies as st

from ctrwlimits import kernels
from ctrwlimits.paths import CadlagPath, _band

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@given(seeds, st.integers(2, 6), st.integers(1, 300))
def test_finite_walk(seed, k, n):
    rng = np.random.default_rng(seed)
    P = rng.random((k, k))
    cum = np.cumsum(P / P.sum(axis=1, keepdims=True), axis=1)
    cum[:, -1] = 1.0
    u = rng.random(n)
    start = np.int64(rng.integers(k))
    assert np.array_equal(kernels._finite_walk_np(cum, start, u), kernels._finite_walk_nb(cum, start, u))


@given(seeds, st.floats(0.0, 500.0))
def test_first_passage(seed, level):
    rng = np.random.default_rng(seed)
    taus = rng.pareto(0.7, 200) + 0.1
    vs = rng.normal(size=200)
    assert kernels._first_passage_np(taus, vs, 0.0, 0.0, level) == kernels._first_passage_nb(taus, vs, 0.0, 0.0, level)


@given(seeds, st.floats(0.0, 1e4))
def test_torus_hold_and_weighted_partial(seed, level):
    rng = np.random.default_rng(seed)
    g = np.cos(rng.uniform(-np.pi, np.pi, 300)) ** 2 + 1e-12
    clocks = rng.exponential(size=300)
    psi = np.sin(rng.uniform(-np.pi, np.pi, 300))
    assert kernels._torus_hold_np(g, clocks, 0.0, level) == kernels._torus_hold_nb(g, clocks, 0.0, level)
    a = kernels._weighted_partial_np(psi, g, clocks, 0.0, level, 0.0)
    b = kernels._weighted_partial_nb(psi, g, clocks, 0.0, level, 0.0)
    assert a == tuple(b)


def _random_step(rng, m):
    times = np.sort(rng.choice(np.arange(1, 100), m, replace=False)) / 100
    return CadlagPath.step(times, rng.integers(-3, 4, m + 1).astype(float), 1.0)


@given(seeds, st.integers(0, 5), st.integers(0, 5), st.floats(0.0, 3.0))
def test_frechet_decide(seed, m, n, d):
    rng = np.random.default_rng(seed)
    P = _random_step(rng, m).graph_vertices()
    Q = _random_step(rng, n).graph_vertices()
    if len(P) < 2 or len(Q) < 2:
        return
    jlo, jhi = _band(P, Q, d)
    assert kernels._frechet_decide_np(P, Q, d, jlo, jhi) == kernels._frechet_decide_nb(P, Q, d, jlo, jhi)


@given(seeds, st.integers(0, 5), st.integers(0, 5), st.floats(0.0, 3.0))
def test_j1_decide(seed, m, n, d):
    rng = np.random.default_rng(seed)
    x, y = _random_step(rng, m), _random_step(rng, n)
    sx, vx = x.step_pieces()
    sy, vy = y.step_pieces()
    args = (sx[1:], vx, sy[1:], vy, 1.0, d)
    assert kernels._j1_decide_np(*args) == kernels._j1_decide_nb(*args)


@given(seeds, st.integers(0, 6), st.floats(0.01, 0.6), st.floats(0.0, 4.0))
def test_osc_decide(seed, m, delta, eps):
    rng = np.random.default_rng(seed)
    starts, vals = _random_step(rng, m).step_pieces()
    assert kernels._osc_decide_np(starts, vals, 1.0, delta, eps) == kernels._osc_decide_nb(starts, vals, 1.0, delta, eps)


def test_dispatch_matches_flag():
    from ctrwlimits._accel import USE_NUMBA, backend_name

    expected = kernels._first_passage_nb if USE_NUMBA else kernels._first_passage_np
    assert kernels.first_passage is expected
    assert backend_name() == ("numba" if USE_NUMBA else "numpy")

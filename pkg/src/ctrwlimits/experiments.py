"""Named experiments: replica functions plus the aggregation that turns them into records.

Every experiment is split into a per-replica function, which gets its own
generator, and a reducer, which sees the replica outputs in index order.
That split is what makes results independent of the worker count.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import chain as chain_mod
from . import ctrw, levy, paths, stats, torus
from .errors import ParameterError
from .stable_laws import StableSpec, stable_cdf


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    replica: Callable
    reduce: Callable
    defaults: dict


NAN = float("nan")


def _key(obj):
    return json.dumps(obj, sort_keys=True)


@functools.lru_cache(maxsize=32)
def _chain(key):
    spec = json.loads(key)
    spec = dict(spec)
    name = spec.pop("name")
    return chain_mod.builtin_chain(name, **spec)


def get_chain(cfg):
    return _chain(_key(cfg["chain"]))


@functools.lru_cache(maxsize=32)
def _torus(key):
    return torus.build_model(**json.loads(key))


def get_torus(cfg):
    return _torus(_key(cfg["torus"]))


def limit_spec_for(cfg) -> levy.LimitSpec:
    """Limit pair matching an i.i.d. chain config (or an explicit ``limit`` block)."""
    if "limit" in cfg and cfg["limit"]:
        return levy.LimitSpec(**cfg["limit"])
    p = get_chain(cfg).params
    regime = "coupled" if cfg["chain"]["name"] == "iid_coupled" else "independent"
    coupling = p.get("coupling") if regime == "coupled" else None
    return levy.LimitSpec(p["alpha"], p["beta"], p["c_alpha"], p["c_plus"], p["c_minus"], regime,
                          truncation=cfg.get("truncation"), coupling=coupling)


def _scaled_ctrw(cfg, rng):
    p = get_chain(cfg).params
    N = float(cfg["N"])
    t = float(cfg.get("t", 1.0))
    w, _, _ = ctrw.ctrw_at_time(get_chain(cfg), N * t, rng)
    return w * N ** (-p["alpha"] / p["beta"])


def _zeta_draw(cfg, rng, minus):
    spec = limit_spec_for(cfg)
    t = float(cfg.get("t", 1.0))
    path = levy.sample_covering_path(spec, t, rng)
    return path.zeta_minus(t) if minus else path.zeta(t)


# ---------------------------------------------------------------------------
# ctrw-marginal


def ctrw_marginal_replica(cfg, rng):
    w = _scaled_ctrw(cfg, rng)
    z = _zeta_draw(cfg, rng, bool(cfg.get("minus", False)))
    return (w, z)


def ctrw_marginal_reduce(cfg, out):
    out = np.asarray(out)
    ks = stats.ks_two_sample(out[:, 0], out[:, 1])
    name = "ks_ctrw_vs_zeta_minus" if cfg.get("minus", False) else "ks_ctrw_vs_zeta"
    return [(name, ks, NAN), ("ks_critical_1pct", stats.ks_critical(len(out), len(out)), NAN)]


# ---------------------------------------------------------------------------
# coupled-undershoot


def coupled_undershoot_replica(cfg, rng):
    w = _scaled_ctrw(cfg, rng)
    zm = _zeta_draw(cfg, rng, True)
    z = _zeta_draw(cfg, rng, False)
    return (w, zm, z)


def coupled_undershoot_reduce(cfg, out):
    out = np.asarray(out)
    n = len(out)
    ks_minus = stats.ks_two_sample(out[:, 0], out[:, 1])
    ks_plus = stats.ks_two_sample(out[:, 0], out[:, 2])
    return [("ks_ctrw_vs_zeta_minus", ks_minus, NAN), ("ks_ctrw_vs_zeta", ks_plus, NAN),
            ("control_ratio", ks_plus / ks_minus if ks_minus > 0 else float("inf"), NAN),
            ("ks_critical_1pct", stats.ks_critical(n, n), NAN)]


# ---------------------------------------------------------------------------
# joint-marginal


def joint_marginal_replica(cfg, rng):
    model = get_chain(cfg)
    p = model.params
    K = int(cfg["K"])
    s, t = ctrw.scaled_endpoint(model, K, p["alpha"], p["beta"], rng, v_n=float(cfg.get("v_n", 0.0)))
    path = levy.sample_levy_pair(limit_spec_for(cfg), 1.0, rng)
    return (s, t, path.S(1.0), path.T_end)


def joint_marginal_reduce(cfg, out):
    out = np.asarray(out)
    n = len(out)
    spec = limit_spec_for(cfg)
    rows = [("ks_T_vs_stable_cdf", stats.ks_to_reference(out[:, 1], stable_cdf(spec.t_law)), NAN),
            ("ks_S_vs_stable_cdf", stats.ks_to_reference(out[:, 0], stable_cdf(spec.s_law)), NAN),
            ("ks_T_vs_levy_pair", stats.ks_two_sample(out[:, 1], out[:, 3]), NAN),
            ("ks_S_vs_levy_pair", stats.ks_two_sample(out[:, 0], out[:, 2]), NAN),
            ("ks_critical_1pct", stats.ks_critical(n), NAN),
            ("ks_critical_1pct_two_sample", stats.ks_critical(n, n), NAN)]
    draws = int(cfg.get("tail_draws", 0))
    if draws:
        model = get_chain(cfg)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(cfg["seed"]), spawn_key=(n,))))
        taus, vs = model.sample_observables(draws, rng)
        excess = taus - model.t_star
        thresholds = np.asarray(cfg.get("tail_thresholds", [2.0**k for k in range(2, 9)]), dtype=float)
        gamma, counts = stats.joint_tail_exponent(excess, vs, thresholds)
        rows.append(("joint_tail_exponent", gamma, NAN))
        rows.append(("joint_tail_bound", max(spec.alpha, spec.beta), NAN))
        rows.append(("joint_tail_last_count", float(counts[-1]), NAN))
    return rows


# ---------------------------------------------------------------------------
# zeta-scaling


def zeta_scaling_replica(cfg, rng):
    spec = limit_spec_for(cfg)
    t0 = float(cfg.get("t0", 1.0))
    a = float(cfg.get("a", 2.0))
    minus = bool(cfg.get("minus", False))
    first = levy.sample_covering_path(spec, a * t0, rng)
    second = levy.sample_covering_path(spec, t0, rng)
    if minus:
        return (first.zeta_minus(a * t0), second.zeta_minus(t0) * a ** (spec.alpha / spec.beta))
    return (first.zeta(a * t0), second.zeta(t0) * a ** (spec.alpha / spec.beta))


def zeta_scaling_reduce(cfg, out):
    out = np.asarray(out)
    n = len(out)
    name = "ks_scaling_zeta_minus" if cfg.get("minus", False) else "ks_scaling_zeta"
    return [(name, stats.ks_two_sample(out[:, 0], out[:, 1]), NAN), ("ks_critical_1pct", stats.ks_critical(n, n), NAN)]


# ---------------------------------------------------------------------------
# m1-interpolation-bound


def m1_bound_replica(cfg, rng):
    model = get_chain(cfg)
    p = model.params
    beta = p["beta"]
    rows = []
    for K in cfg["K"]:
        K = int(K)
        traj = ctrw.simulate_trajectory(model, K, rng)
        pair = ctrw.scale(traj, K, p["alpha"], beta, v_n=float(cfg.get("v_n", 0.0)))
        interp = ctrw.interpolated_scaled_path(traj, K, beta, v_n=float(cfg.get("v_n", 0.0)))
        d = paths.m1_distance(pair.s_path, interp, epsilon=float(cfg.get("epsilon", 1e-3)) / K)
        rows.append((K, d, float(np.max(np.abs(traj.jump_values)))))
    return rows


def m1_bound_reduce(cfg, out):
    out = np.asarray(out)  # replicas x K x 3
    p = get_chain(cfg).params
    beta = p["beta"]
    ks = out[0, :, 0]
    power = -0.5 * (1.0 + 1.0 / beta)
    ratio = out[:, :, 1] / (ks[None, :] ** power * np.sqrt(out[:, :, 2]))
    # fit the constant on the coarsest K only, then test it on the finer ones
    C = float(np.max(ratio[:, 0]))
    medians = np.median(out[:, :, 1], axis=0)
    fit = stats.scaling_exponent(list(zip(ks, medians)))
    rows = [("fitted_C", C, NAN),
            ("bound_violations", float(np.sum(ratio[:, 1:] > C)), NAN),
            ("median_slope", fit.slope, fit.stderr),
            ("predicted_slope", power, NAN)]
    rows += [(f"median_distance_K{int(k)}", float(m), NAN) for k, m in zip(ks, medians)]
    return rows


# ---------------------------------------------------------------------------
# torus-mixing


def torus_mixing_replica(cfg, rng):
    model = get_torus(cfg)
    grid = np.asarray(cfg["t_grid"], dtype=float)
    order = np.argsort(grid, kind="stable")
    out = np.empty(grid.size)
    out[order] = torus.states_at_times(model, grid[order], rng)
    return tuple(out)


def torus_mixing_reduce(cfg, out):
    model = get_torus(cfg)
    rows = torus.mixing_summary(model, np.asarray(cfg["t_grid"], dtype=float), np.asarray(out),
                                float(cfg.get("delta", 0.1)))
    recs = []
    for r in rows:
        recs.append((f"mass_t{r['t']:g}", r["mass"], r["mass_se"]))
        recs.append((f"plus_share_t{r['t']:g}", r["plus_share"], r["plus_share_se"]))
    return recs


# ---------------------------------------------------------------------------
# fake-diffusion


def fake_diffusion_replica(cfg, rng):
    model = get_torus(cfg)
    t = float(cfg.get("t", 1.0))
    return tuple(torus.additive_functional(model, N=int(N), t=t, rng=rng, scaled=False) for N in cfg["N"])


def fake_diffusion_reduce(cfg, out):
    out = np.asarray(out)
    ns = [int(N) for N in cfg["N"]]
    spreads = [stats.interquartile_range(out[:, j]) for j in range(len(ns))]
    fit = stats.scaling_exponent(list(zip(ns, spreads)))
    rows = [("iqr_scaling_exponent", fit.slope, fit.stderr)]
    for j, N in enumerate(ns):
        col = out[:, j]
        rows.append((f"iqr_N{N}", spreads[j], NAN))
        rows.append((f"mean_N{N}", float(col.mean()), float(col.std(ddof=1) / math.sqrt(col.size))))
    return rows


# ---------------------------------------------------------------------------
# beta2-clt


def _variance(cfg):
    fin = get_chain(cfg).finite
    if cfg.get("variance_formula", "asymptotic") == "doubled-bracket":
        return chain_mod.doubled_bracket_variance(fin)
    return chain_mod.asymptotic_variance(fin)


def beta2_clt_replica(cfg, rng):
    K = int(cfg["K"])
    _, vs = get_chain(cfg).sample_observables(K, rng)
    return float(np.sum(vs)) / math.sqrt(K)


def beta2_clt_reduce(cfg, out):
    out = np.asarray(out)
    var = _variance(cfg)
    law = StableSpec.gaussian(var)
    from scipy.stats import norm

    ks = stats.ks_to_reference(out, norm(scale=math.sqrt(var)).cdf)
    return [("variance", var, NAN),
            ("sample_variance", float(out.var(ddof=1)), NAN),
            ("ks_vs_gaussian", ks, NAN),
            ("ks_critical_1pct", stats.ks_critical(len(out)), NAN),
            ("gaussian_index", law.index, NAN)]


# ---------------------------------------------------------------------------
# poisson-check


def poisson_check_replica(cfg, rng):
    k = int(cfg.get("states", 6))
    fin = chain_mod.random_finite_chain(k, rng)
    chi = chain_mod.solve_poisson(fin)
    residual = float(np.max(np.abs(chi - fin.transition @ chi - fin.v)))
    series = chain_mod.neumann_series(fin)
    return (residual, float(np.max(np.abs(series - chi))))


def poisson_check_reduce(cfg, out):
    out = np.asarray(out)
    return [("max_residual", float(out[:, 0].max()), NAN),
            ("max_neumann_gap", float(out[:, 1].max()), NAN)]


EXPERIMENTS = {
    "ctrw-marginal": Experiment(
        "ctrw-marginal", "CTRW at a fixed time against draws of the limit zeta",
        ctrw_marginal_replica, ctrw_marginal_reduce,
        {"chain": {"name": "iid_pareto"}, "N": 16384, "t": 1.0}),
    "joint-marginal": Experiment(
        "joint-marginal", "scaled partial sums and renewal times against their stable limits",
        joint_marginal_replica, joint_marginal_reduce,
        {"chain": {"name": "iid_pareto"}, "K": 16384}),
    "zeta-scaling": Experiment(
        "zeta-scaling", "self-similarity of zeta (or its undershoot version) under time dilation",
        zeta_scaling_replica, zeta_scaling_reduce,
        {"chain": {"name": "iid_pareto"}, "t0": 1.0, "a": 2.0}),
    "coupled-undershoot": Experiment(
        "coupled-undershoot", "coupled CTRW against the undershoot limit, with the overshoot limit as control",
        coupled_undershoot_replica, coupled_undershoot_reduce,
        {"chain": {"name": "iid_coupled"}, "N": 16384, "t": 1.0}),
    "m1-interpolation-bound": Experiment(
        "m1-interpolation-bound", "M1 distance between the scaled walk and its linear interpolation",
        m1_bound_replica, m1_bound_reduce,
        {"chain": {"name": "iid_pareto", "beta": 1.0}, "K": [256, 1024, 4096]}),
    "torus-mixing": Experiment(
        "torus-mixing", "mass of the torus jump process near the zeros of its rate",
        torus_mixing_replica, torus_mixing_reduce,
        {"torus": {"gamma": "cos2", "kernel": "uniform"}, "t_grid": [0.0, 10.0, 100.0, 1000.0], "delta": 0.1}),
    "fake-diffusion": Experiment(
        "fake-diffusion", "spread growth of an odd additive functional of the torus process",
        fake_diffusion_replica, fake_diffusion_reduce,
        {"torus": {"gamma": "cos2", "kernel": "uniform", "observable": "sine"}, "N": [256, 1024, 4096]}),
    "beta2-clt": Experiment(
        "beta2-clt", "Gaussian limit for a bounded observable of a finite chain",
        beta2_clt_replica, beta2_clt_reduce,
        {"chain": {"name": "finite_random", "k": 5, "seed": 0}, "K": 16384}),
    "poisson-check": Experiment(
        "poisson-check", "Poisson-equation residual and Neumann-series agreement on random chains",
        poisson_check_replica, poisson_check_reduce,
        {"states": 6}),
}


def get_experiment(name) -> Experiment:
    if name not in EXPERIMENTS:
        raise ParameterError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    return EXPERIMENTS[name]

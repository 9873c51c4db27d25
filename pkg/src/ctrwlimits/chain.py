"""Markov chains carrying a renewal observable ``tau`` and a jump observable ``v``.

Finite chains get exact linear-algebra diagnostics (contraction constant on
mean-zero functions, Poisson corrector, martingale decomposition).  The
continuous-state builtins are i.i.d., so their contraction constant is 0 by
construction and nothing is computed for them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import kernels
from .errors import ParameterError, StructuralError

SCHEMA = "ctrwlimits.finite_chain/1"
DEFAULT_T_STAR = 0.1


@dataclass
class FiniteChain:
    """Row-stochastic matrix with a stationary vector and per-state observables."""

    states: list
    transition: np.ndarray
    pi: np.ndarray
    tau: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ParameterError("transition must be a square matrix")
        k = P.shape[0]
        if len(self.states) != k:
            raise ParameterError("states and transition disagree in size")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise ParameterError("transition is not row-stochastic")
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (k,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ParameterError("pi must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise ParameterError("pi is not invariant for transition")
        self.transition = P
        self.pi = pi
        self.tau = np.asarray(self.tau, dtype=float).reshape(k)
        self.v = np.asarray(self.v, dtype=float).reshape(k)

    @property
    def size(self):
        return self.transition.shape[0]

    @classmethod
    def from_matrix(cls, transition, tau, v, states=None):
        """Build a chain, computing its stationary vector."""
        P = np.asarray(transition, dtype=float)
        pi = stationary_distribution(P)
        states = list(range(P.shape[0])) if states is None else list(states)
        return cls(states, P, pi, tau, v)

    def inner(self, f, g):
        return float(np.sum(self.pi * f * g))

    def norm2(self, f):
        return self.inner(f, f)

    def mean(self, f):
        return float(self.pi @ f)

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "states": [s if isinstance(s, (int, str)) else str(s) for s in self.states],
            "transition": self.transition.tolist(),
            "pi": self.pi.tolist(),
            "tau": self.tau.tolist(),
            "v": self.v.tolist(),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, doc):
        schema = doc.get("schema")
        if schema != SCHEMA:
            raise ParameterError(f"unsupported chain schema {schema!r}, expected {SCHEMA!r}")
        missing = {"states", "transition", "pi", "tau", "v"} - set(doc)
        if missing:
            raise ParameterError(f"chain document lacks fields {sorted(missing)}")
        return cls(doc["states"], np.array(doc["transition"]), np.array(doc["pi"]),
                   np.array(doc["tau"]), np.array(doc["v"]))

    @classmethod
    def from_json(cls, text_or_path):
        text = text_or_path
        if not text_or_path.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def stationary_distribution(P):
    """Left Perron vector of a row-stochastic matrix via a bordered linear solve."""
    P = np.asarray(P, dtype=float)
    k = P.shape[0]
    A = np.vstack([(P.T - np.eye(k)), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def spectral_gap(chain: FiniteChain) -> float:
    """Operator norm of ``P`` on the mean-zero subspace of ``L^2(pi)``.

    Returned as the largest singular value of ``D^{1/2} P D^{-1/2}`` after
    projecting out ``sqrt(pi)``; states with zero stationary mass are dropped.
    A value below 1 certifies geometric contraction.
    """
    P = chain.transition
    support = chain.pi > 0
    P = P[np.ix_(support, support)]
    pi = chain.pi[support]
    root = np.sqrt(pi)
    A = root[:, None] * P / root[None, :]
    proj = np.eye(len(pi)) - np.outer(root, root)
    a = float(np.linalg.norm(A @ proj, 2))
    return min(max(a, 0.0), 1.0) if a < 1.0 + 1e-9 else a


def solve_poisson(chain: FiniteChain, v=None) -> np.ndarray:
    """Zero-mean ``chi`` with ``(I - P) chi = v`` (``v`` defaults to ``chain.v``)."""
    v = chain.v if v is None else np.asarray(v, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v))))
    if abs(chain.mean(v)) > 1e-12 * scale:
        raise ParameterError("observable must have zero stationary mean")
    if spectral_gap(chain) >= 1.0 - 1e-12:
        raise StructuralError("I - P is singular on mean-zero functions (no contraction)")
    k = chain.size
    P = chain.transition
    # adding 1 pi^T makes the system regular and pins the pi-mean to zero
    A = np.eye(k) - P + np.outer(np.ones(k), chain.pi)
    chi = np.linalg.solve(A, v)
    chi = chi + np.linalg.solve(A, v - A @ chi)
    chi = chi - chain.mean(chi)
    return chi


def neumann_series(chain: FiniteChain, v=None, n_terms=200) -> np.ndarray:
    """Partial sum ``sum_{n < n_terms} P^n v``."""
    v = chain.v if v is None else np.asarray(v, dtype=float)
    total = np.zeros_like(v)
    term = v.copy()
    for _ in range(n_terms):
        total += term
        term = chain.transition @ term
    return total


def asymptotic_variance(chain: FiniteChain) -> float:
    """Limit of ``Var(S_N) / N`` under the stationary start.

    Equals the martingale-increment variance ``|chi|^2 - |P chi|^2``, which
    simplifies to ``2 <v, chi> - |v|^2``.
    """
    chi = solve_poisson(chain)
    Pchi = chain.transition @ chi
    return chain.norm2(chi) - chain.norm2(Pchi)


def doubled_bracket_variance(chain: FiniteChain) -> float:
    """``2 (|v|^2 + |chi|^2 - |P chi|^2)``.

    Differs from :func:`asymptotic_variance` by the additive ``|v|^2`` term
    and the overall factor 2.  Kept so experiments can compare the two
    candidate Gaussian references side by side.
    """
    chi = solve_poisson(chain)
    Pchi = chain.transition @ chi
    return 2.0 * (chain.norm2(chain.v) + chain.norm2(chi) - chain.norm2(Pchi))


def partial_sum_variance(chain: FiniteChain, n: int) -> float:
    """Exact ``Var(S_n)`` for the stationary chain, by summing autocovariances."""
    v = chain.v
    total = n * chain.norm2(v)
    term = v.copy()
    for lag in range(1, n):
        term = chain.transition @ term
        total += 2.0 * (n - lag) * chain.inner(v, term)
    return total


@dataclass
class MartingaleCheck:
    max_conditional_mean: float
    telescoping_error: float
    n_steps: int


def martingale_decomposition_check(chain: FiniteChain, n_steps: int, rng) -> MartingaleCheck:
    """Verify the corrector-based martingale decomposition.

    With ``R(x, y) = chi(x) - P chi(y)`` the conditional mean
    ``sum_x P(y, x) R(x, y)`` must vanish for every ``y``, and along a sampled
    path ``S_N - (chi(X_0) - P chi(X_{N-1}))`` must equal
    ``sum_{k=1}^{N-1} R(X_k, X_{k-1})``.
    """
    chi = solve_poisson(chain)
    P = chain.transition
    Pchi = P @ chi
    cond = P @ chi - Pchi * P.sum(axis=1)
    states = sample_finite_path(chain, n_steps, rng)
    S = float(np.sum(chain.v[states]))
    increments = chi[states[1:]] - Pchi[states[:-1]]
    martingale = float(np.sum(increments))
    boundary = chi[states[0]] - Pchi[states[-1]]
    return MartingaleCheck(float(np.max(np.abs(cond))), abs(S - boundary - martingale), n_steps)


def sample_finite_path(chain: FiniteChain, n_steps: int, rng, start=None) -> np.ndarray:
    """Indices ``X_0, ..., X_{n_steps-1}`` with ``X_0 ~ pi`` unless ``start`` given."""
    if n_steps < 1:
        raise ParameterError("n_steps must be positive")
    cum = np.cumsum(chain.transition, axis=1)
    cum[:, -1] = 1.0
    if start is None:
        start = int(np.searchsorted(np.cumsum(chain.pi), rng.random(), side="right"))
        start = min(start, chain.size - 1)
    u = rng.random(n_steps - 1)
    return kernels.finite_walk(cum, np.int64(start), u)


def tail_domination_ratio(chain: FiniteChain, absolutely_continuous, lambdas):
    """Sup over states and thresholds of ``Q(x, [tau >= l]) / P_a(x, [tau >= l])``.

    ``absolutely_continuous`` is the matrix ``P_a`` of a split ``P = P_a + Q``
    with ``0 <= P_a <= P``.  Pairs where both masses vanish are skipped; a
    positive ``Q`` mass over a null ``P_a`` mass gives ``inf``.
    """
    Pa = np.asarray(absolutely_continuous, dtype=float)
    P = chain.transition
    if Pa.shape != P.shape or np.any(Pa < -1e-15) or np.any(Pa > P + 1e-15):
        raise ParameterError("P_a must satisfy 0 <= P_a <= P entrywise")
    Q = P - Pa
    worst = 0.0
    detail = []
    for lam in np.atleast_1d(lambdas):
        mask = chain.tau >= lam
        q = Q[:, mask].sum(axis=1)
        a = Pa[:, mask].sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(a > 0, q / np.where(a > 0, a, 1.0), np.where(q > 0, np.inf, 0.0))
        m = float(np.max(r)) if r.size else 0.0
        detail.append((float(lam), m))
        worst = max(worst, m)
    return worst, detail


# ---------------------------------------------------------------------------
# chain models


@dataclass
class ChainModel:
    """A stationary chain together with its observables.

    ``step``/``initial``/``tau``/``v`` follow the state-level interface.  The
    optional ``sampler(n, rng) -> (tau_values, v_values)`` produces a whole
    stationary run at once and is what the simulators use when present.
    """

    name: str
    step: Callable[[Any, np.random.Generator], Any]
    initial: Callable[[np.random.Generator], Any]
    tau: Callable[[Any], float]
    v: Callable[[Any], float]
    t_star: float
    params: dict = field(default_factory=dict)
    finite: Optional[FiniteChain] = None
    sampler: Optional[Callable] = None
    truncated_mean: Optional[Callable[[float], float]] = None
    coupling: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def sample_observables(self, n, rng):
        if self.sampler is not None:
            return self.sampler(n, rng)
        taus = np.empty(n)
        vs = np.empty(n)
        x = self.initial(rng)
        for i in range(n):
            taus[i] = self.tau(x)
            vs[i] = self.v(x)
            x = self.step(x, rng)
        return taus, vs

    def sample_states(self, n, rng):
        out = []
        x = self.initial(rng)
        for _ in range(n):
            out.append(x)
            x = self.step(x, rng)
        return out


def coupling_constant(alpha, c_alpha, c_plus, c_minus, convention="tail-matched"):
    """Constant ``C`` of the coupling curve ``rho(l) = C |l|^(beta/alpha)``.

    ``tail-matched`` picks ``(c_alpha / (c_plus + c_minus))^(1/alpha)`` so that
    ``rho(V)`` has right tail ``c_alpha l^-alpha`` whenever ``V`` has tail
    constants ``c_plus``, ``c_minus``.  ``ratio`` uses the plain ratio
    ``c_alpha / (c_plus + c_minus)``; the two agree when that ratio is 1.
    """
    total = c_plus + c_minus
    if total <= 0:
        raise ParameterError("coupling needs c_plus + c_minus > 0")
    if convention == "tail-matched":
        return (c_alpha / total) ** (1.0 / alpha)
    if convention == "ratio":
        return c_alpha / total
    raise ParameterError(f"unknown coupling convention {convention!r}")


def _pareto_v(u_mag, u_sign, beta, c_plus, c_minus):
    total = c_plus + c_minus
    mag = total ** (1.0 / beta) * u_mag ** (-1.0 / beta)
    sign = np.where(u_sign < c_plus / total, 1.0, -1.0)
    return sign * mag


def _pareto_v_mean(beta, c_plus, c_minus):
    total = c_plus + c_minus
    if beta <= 1.0:
        return 0.0
    return (c_plus - c_minus) / total * total ** (1.0 / beta) * beta / (beta - 1.0)


def _pareto_truncated_mean(beta, c_plus, c_minus):
    """``K -> E[V 1{|V| <= K}]`` for the symmetric-magnitude Pareto jump law."""
    total = c_plus + c_minus

    def mean(K):
        if beta != 1.0:
            raise ParameterError("closed-form truncated mean only provided for beta = 1")
        if K <= total:
            return 0.0
        return (c_plus - c_minus) * math.log(K / total)

    return mean


def _uniform_open(rng, size):
    # (0, 1]: keeps u^(-1/a) finite
    return 1.0 - rng.random(size)


def _iid_model(name, params, t_star, draw_state, tau_of, v_of, vec_sampler, **extra):
    def step(_x, rng):
        return draw_state(rng)

    return ChainModel(name=name, step=step, initial=draw_state, tau=tau_of, v=v_of,
                      t_star=t_star, params=params, sampler=vec_sampler, **extra)


def iid_pareto(alpha=0.5, beta=0.5, c_alpha=1.0, c_plus=1.0, c_minus=1.0, t_star=DEFAULT_T_STAR):
    """I.i.d. states ``(u_tau, u_v, u_sign)``, independent exact-Pareto tails.

    ``tau = t_star + c_alpha^(1/alpha) u_tau^(-1/alpha)`` and ``|V|`` is Pareto
    with ``P(V > l) = c_plus l^-beta`` beyond ``(c_plus + c_minus)^(1/beta)``;
    ``V`` is centred when ``beta > 1``.  Joint large values of ``tau`` and
    ``|V|`` have probability of order ``l^-(alpha + beta)``.
    """
    _check_indices(alpha, beta, c_alpha, c_plus, c_minus, t_star)
    shift = _pareto_v_mean(beta, c_plus, c_minus)
    scale_tau = c_alpha ** (1.0 / alpha)

    def draw_state(rng):
        return tuple(_uniform_open(rng, 3))

    def tau_of(x):
        return t_star + scale_tau * x[0] ** (-1.0 / alpha)

    def v_of(x):
        return float(_pareto_v(x[1], x[2], beta, c_plus, c_minus)) - shift

    def sampler(n, rng):
        u = _uniform_open(rng, (3, n))
        taus = t_star + scale_tau * u[0] ** (-1.0 / alpha)
        vs = _pareto_v(u[1], u[2], beta, c_plus, c_minus) - shift
        return taus, vs

    params = dict(alpha=alpha, beta=beta, c_alpha=c_alpha, c_plus=c_plus, c_minus=c_minus, t_star=t_star)
    tm = _pareto_truncated_mean(beta, c_plus, c_minus) if beta == 1.0 else None
    return _iid_model("iid_pareto", params, t_star, draw_state, tau_of, v_of, sampler, truncated_mean=tm)


def iid_coupled(alpha=0.5, beta=0.5, c_alpha=1.0, c_plus=1.0, c_minus=0.0, t_star=DEFAULT_T_STAR,
                convention="tail-matched"):
    """I.i.d. states with ``tau = t_star + rho(V)`` exactly.

    ``V`` is the same Pareto jump as in :func:`iid_pareto`; ``rho`` is the
    coupling curve with constant from :func:`coupling_constant`.
    """
    _check_indices(alpha, beta, c_alpha, c_plus, c_minus, t_star)
    if beta >= 2.0:
        raise ParameterError("coupled chains need beta < 2")
    C = coupling_constant(alpha, c_alpha, c_plus, c_minus, convention)
    shift = _pareto_v_mean(beta, c_plus, c_minus)
    power = beta / alpha

    def rho(x):
        return C * np.abs(x) ** power

    def draw_state(rng):
        return tuple(_uniform_open(rng, 2))

    def v_of(x):
        return float(_pareto_v(x[0], x[1], beta, c_plus, c_minus)) - shift

    def tau_of(x):
        return t_star + float(rho(v_of(x)))

    def sampler(n, rng):
        u = _uniform_open(rng, (2, n))
        vs = _pareto_v(u[0], u[1], beta, c_plus, c_minus) - shift
        return t_star + rho(vs), vs

    params = dict(alpha=alpha, beta=beta, c_alpha=c_alpha, c_plus=c_plus, c_minus=c_minus,
                  t_star=t_star, coupling=C, convention=convention)
    tm = _pareto_truncated_mean(beta, c_plus, c_minus) if beta == 1.0 else None
    return _iid_model("iid_coupled", params, t_star, draw_state, tau_of, v_of, sampler,
                      truncated_mean=tm, coupling=rho)


def random_finite_chain(k, rng, t_star=DEFAULT_T_STAR, tau_spread=1.0, v_scale=1.0, laziness=0.0):
    """Dense random ``k``-state chain with bounded, pi-centred ``v``."""
    if k < 2:
        raise ParameterError("need at least two states")
    W = rng.random((k, k)) + 0.05
    P = W / W.sum(axis=1, keepdims=True)
    if laziness:
        P = laziness * np.eye(k) + (1.0 - laziness) * P
    pi = stationary_distribution(P)
    v = rng.normal(0.0, v_scale, size=k)
    v = v - pi @ v
    tau = t_star + tau_spread * rng.random(k)
    chain = FiniteChain(list(range(k)), P, pi, tau, v)
    # exact centring on the stored pi
    chain.v = chain.v - chain.mean(chain.v)
    return chain


def finite_model(chain: FiniteChain, name="finite", params=None):
    """Wrap a :class:`FiniteChain` as a :class:`ChainModel` started from pi."""
    cum_pi = np.cumsum(chain.pi)
    P = chain.transition

    def initial(rng):
        return min(int(np.searchsorted(cum_pi, rng.random(), side="right")), chain.size - 1)

    def step(x, rng):
        return min(int(np.searchsorted(np.cumsum(P[x]), rng.random(), side="right")), chain.size - 1)

    def sampler(n, rng):
        idx = sample_finite_path(chain, n, rng)
        return chain.tau[idx], chain.v[idx]

    return ChainModel(name=name, step=step, initial=initial, tau=lambda x: float(chain.tau[x]),
                      v=lambda x: float(chain.v[x]), t_star=float(np.min(chain.tau)),
                      params=params or {}, finite=chain, sampler=sampler)


def builtin_chain(name, **params) -> ChainModel:
    """Construct one of the named test-bed chains."""
    if name == "iid_pareto":
        return iid_pareto(**params)
    if name == "iid_coupled":
        return iid_coupled(**params)
    if name == "finite_random":
        p = dict(params)
        k = int(p.pop("k", 5))
        seed = int(p.pop("seed", 0))
        chain = random_finite_chain(k, np.random.default_rng(seed), **p)
        return finite_model(chain, "finite_random", dict(params, k=k, seed=seed))
    if name == "torus_skeleton":
        from .torus import skeleton_chain

        return skeleton_chain(**params)
    raise ParameterError(f"unknown builtin chain {name!r}")


BUILTIN_CHAINS = ("iid_pareto", "iid_coupled", "finite_random", "torus_skeleton")


def _check_indices(alpha, beta, c_alpha, c_plus, c_minus, t_star):
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    if not 0.0 < beta < 2.0:
        raise ParameterError("beta must lie in (0, 2) for a Pareto jump law")
    if c_alpha <= 0 or c_plus < 0 or c_minus < 0 or c_plus + c_minus <= 0:
        raise ParameterError("tail constants must be positive")
    if t_star <= 0:
        raise ParameterError("t_star must be positive")

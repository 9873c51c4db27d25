"""Time the compiled and plain-numpy flavour of each hot kernel.

    python benchmarks/bench_kernels.py [--repeat 5]

Both flavours get identical inputs; the compiled one is warmed up first so
JIT compilation is not counted.  Results are checked for equality as a guard.
"""

import argparse
import timeit

import numpy as np

from ctrwlimits import kernels
from ctrwlimits.paths import CadlagPath, _band, j1_distance, m1_distance, oscillation


def _cases(rng):
    k = 8
    P = rng.random((k, k))
    cum = np.cumsum(P / P.sum(axis=1, keepdims=True), axis=1)
    cum[:, -1] = 1.0
    yield "finite_walk", (cum, np.int64(0), rng.random(20_000))

    taus = rng.pareto(0.7, 50_000) + 0.1
    vs = rng.normal(size=50_000)
    yield "first_passage", (taus, vs, 0.0, 0.0, float(taus.sum() * 0.9))

    g = np.cos(rng.uniform(-np.pi, np.pi, 50_000)) ** 2 + 1e-12
    clocks = rng.exponential(size=50_000)
    level = float(np.sum(clocks / g) * 0.9)
    yield "torus_hold", (g, clocks, 0.0, level)
    yield "weighted_partial", (np.sin(rng.normal(size=50_000)), g, clocks, 0.0, level, 0.0)

    def walk(m):
        times = np.sort(rng.choice(np.arange(1, 10 * m), m, replace=False)) / (10 * m)
        return CadlagPath.step(times, np.cumsum(rng.normal(size=m + 1)), 1.0)

    # thresholds just above the true distance, so the decision has to sweep everything
    x, y = walk(200), walk(200)
    Pv, Qv = x.graph_vertices(), y.graph_vertices()
    d = 1.01 * m1_distance(x, y)
    jlo, jhi = _band(Pv, Qv, d)
    yield "frechet_decide", (Pv, Qv, d, jlo, jhi)
    sx, vx = x.step_pieces()
    sy, vy = y.step_pieces()
    yield "j1_decide", (sx[1:], vx, sy[1:], vy, 1.0, 1.01 * j1_distance(x, y))
    yield "osc_decide", (sx, vx, 1.0, 0.05, 1.01 * oscillation(x, 0.05))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in _cases(np.random.default_rng(args.seed)):
        plain = getattr(kernels, f"_{name}_np")
        compiled = getattr(kernels, f"_{name}_nb")
        a, b = plain(*inputs), compiled(*inputs)
        if not np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float)):
            raise SystemExit(f"{name}: flavours disagree")
        t_np = min(timeit.repeat(lambda: plain(*inputs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: compiled(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.0f}x")


if __name__ == "__main__":
    main()

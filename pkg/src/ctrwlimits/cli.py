"""Command line: ``ctrwlimits run <config>``, ``ctrwlimits list``, ``ctrwlimits selftest``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from . import experiments
from ._accel import backend_name
from .errors import CtrwError, ParameterError

WORKERS_ENV = "CTRWLIMITS_WORKERS"
COMMON_KEYS = {"experiment", "seed", "replicas", "output"}
OPTIONAL_KEYS = {"truncation", "limit", "minus", "v_n", "epsilon", "tail_draws", "tail_thresholds",
                 "variance_formula", "t", "t0", "a", "N", "K", "chain", "torus", "t_grid", "delta",
                 "states"}


class ConfigError(ParameterError):
    def __init__(self, message, line=None, field=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    replicas: int
    output: Optional[str]
    params: dict

    def merged(self):
        exp = experiments.get_experiment(self.experiment)
        out = json.loads(json.dumps(exp.defaults))
        for k, v in self.params.items():
            if isinstance(v, dict) and isinstance(out.get(k), dict):
                # a new chain/torus name starts from scratch rather than inheriting family defaults
                if v.get("name", out[k].get("name")) != out[k].get("name"):
                    out[k] = dict(v)
                else:
                    out[k] = {**out[k], **v}
            else:
                out[k] = v
        out["seed"] = self.seed
        out["replicas"] = self.replicas
        return out

    def params_hash(self):
        merged = self.merged()
        merged["experiment"] = self.experiment
        blob = json.dumps(merged, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_config(text: str) -> ExperimentConfig:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    if node is None or not isinstance(node, yaml.MappingNode):
        raise ConfigError("config must be a key-value mapping", line=1)
    lines = {k.value: k.start_mark.line + 1 for k, _ in node.value}
    data = yaml.safe_load(text)
    for key in data:
        if key not in COMMON_KEYS | OPTIONAL_KEYS:
            raise ConfigError("unknown key", line=lines.get(key), field=key)
    for key in ("experiment", "seed"):
        if key not in data:
            raise ConfigError("missing required key", field=key)
    name = data["experiment"]
    if name not in experiments.EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}", line=lines.get("experiment"), field="experiment")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer", line=lines.get("seed"), field="seed")
    replicas = data.get("replicas", 1000)
    if not isinstance(replicas, int) or isinstance(replicas, bool) or replicas < 1:
        raise ConfigError("replicas must be a positive integer", line=lines.get("replicas"), field="replicas")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a path", line=lines.get("output"), field="output")
    params = {k: v for k, v in data.items() if k not in COMMON_KEYS}
    return ExperimentConfig(name, seed, replicas, output, params)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# replica execution


def replica_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_block(args):
    name, cfg, indices = args
    exp = experiments.get_experiment(name)
    return [exp.replica(cfg, replica_rng(cfg["seed"], i)) for i in indices]


def worker_count(explicit=None):
    if explicit is not None:
        return max(1, int(explicit))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_replicas(name, cfg, n, workers=1, block=None):
    """Replica outputs in index order; identical for every worker count."""
    block = block or max(1, min(256, math.ceil(n / (4 * workers))))
    blocks = [(name, cfg, list(range(s, min(n, s + block)))) for s in range(0, n, block)]
    if workers <= 1:
        parts = [_run_block(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    return [r for part in parts for r in part]


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    params_hash: str
    statistic: str
    value: float
    standard_error: float
    replicas: int
    runtime: float = 0.0

    def canonical(self):
        return {"experiment": self.experiment, "params_hash": self.params_hash,
                "statistic": self.statistic, "value": _finite_or_none(self.value),
                "standard_error": _finite_or_none(self.standard_error), "replicas": self.replicas}


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def run(config: ExperimentConfig, workers=None):
    """Run one experiment and return its records (runtime filled in, not written)."""
    name = config.experiment
    cfg = config.merged()
    exp = experiments.get_experiment(name)
    start = time.perf_counter()
    try:
        out = run_replicas(name, cfg, config.replicas, worker_count(workers))
        rows = exp.reduce(cfg, out)
    except CtrwError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    elapsed = time.perf_counter() - start
    h = config.params_hash()
    return [ResultRecord(name, h, stat, float(v), float(se), config.replicas, elapsed) for stat, v, se in rows]


def to_jsonl(records):
    return "".join(json.dumps(r.canonical(), sort_keys=True, allow_nan=False) + "\n" for r in records)


def to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "params_hash", "statistic", "value", "standard_error", "replicas", "runtime_s"])
    for r in records:
        c = r.canonical()
        w.writerow([c["experiment"], c["params_hash"], c["statistic"], c["value"], c["standard_error"],
                    c["replicas"], f"{r.runtime:.3f}"])
    return buf.getvalue()


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(records, stem):
    atomic_write(stem + ".jsonl", to_jsonl(records))
    atomic_write(stem + ".csv", to_csv(records))
    return stem + ".jsonl", stem + ".csv"


# ---------------------------------------------------------------------------
# commands

VERIFIES = {
    "ctrw-marginal": "walk sampled at a fixed time converges to S evaluated at the inverse subordinator",
    "joint-marginal": "scaled sums and renewal times have stable marginals; big waits and big jumps rarely coincide",
    "zeta-scaling": "zeta at time a*t matches a^(alpha/beta) times zeta at time t",
    "coupled-undershoot": "with coupled jumps the walk converges to the undershoot limit, not the overshoot one",
    "m1-interpolation-bound": "M1 distance to the linear interpolation shrinks at the predicted power of K",
    "torus-mixing": "torus process concentrates evenly on the two zeros of its rate",
    "fake-diffusion": "odd observable with tail matched to the waits spreads like N^(alpha/beta)",
    "beta2-clt": "finite-chain partial sums are Gaussian with variance from the Poisson corrector",
    "poisson-check": "Poisson equation solved to round-off and agreeing with its Neumann series",
}


def list_experiments():
    return [(name, exp.summary, VERIFIES[name]) for name, exp in experiments.EXPERIMENTS.items()]


def _cmd_list(args):
    for name, summary, verifies in list_experiments():
        print(f"{name:24s} {summary}")
        print(f"{'':24s}   checks: {verifies}")
    return 0


def _cmd_run(args):
    config = load_config(args.config)
    records = run(config, args.workers)
    stem = args.output or config.output or os.path.join("results", config.experiment)
    jl, cs = write_outputs(records, stem)
    for r in records:
        se = "" if not math.isfinite(r.standard_error) else f" (se {r.standard_error:.3g})"
        print(f"{r.statistic:28s} {r.value:.6g}{se}")
    print(f"wrote {jl} and {cs}", file=sys.stderr)
    return 0


def selftest():
    """Fast smoke checks; returns a list of (name, ok, detail)."""
    from . import chain, kernels, paths

    results = []
    rng = np.random.default_rng(0)
    fin = chain.random_finite_chain(5, rng)
    chi = chain.solve_poisson(fin)
    res = float(np.max(np.abs(chi - fin.transition @ chi - fin.v)))
    results.append(("poisson residual", res <= 1e-10, f"{res:.2e}"))
    taus = rng.random(500) + 0.1
    vs = rng.normal(size=500)
    a = kernels._first_passage_np(taus, vs, 0.0, 0.0, 100.0)
    b = kernels._first_passage_nb(taus, vs, 0.0, 0.0, 100.0)
    results.append(("kernel flavours agree", tuple(a) == tuple(b), backend_name()))
    step = paths.CadlagPath.step([0.5], [0.0, 1.0], 1.0)
    d = paths.m1_distance(step, paths.CadlagPath.linear([0, 0.4, 0.5, 1.0], [0, 0, 1, 1]), 1e-9)
    results.append(("m1 ramp distance", abs(d - 1.0 / 11.0) < 1e-6, f"{d:.6g}"))
    cfg = parse_config("experiment: poisson-check\nseed: 3\nreplicas: 4\n")
    same = to_jsonl(run(cfg, 1)) == to_jsonl(run(cfg, 1))
    results.append(("deterministic run", same, ""))
    return results


def _cmd_selftest(args):
    ok = True
    for name, passed, detail in selftest():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name} {detail}")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="ctrwlimits", description="CTRW limit experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a YAML config")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="output path stem (overrides the config)")
    p_run.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p_run.set_defaults(func=_cmd_run)
    sub.add_parser("list", help="list the experiment catalogue").set_defaults(func=_cmd_list)
    sub.add_parser("selftest", help="quick internal checks").set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CtrwError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

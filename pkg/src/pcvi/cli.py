"""Command-line batch runner for the sparse-recovery benchmarks.

Subcommands
-----------
bench CONFIG.json      run every (K, noise, seed, algorithm, epsilon) cell
solve [flags]          one algorithm on one instance
project --l1 T         l1-ball projection of a whitespace-separated vector on stdin
validate-r56           check a constant-inertia (alpha, sigma, delta) triple
plot-series RUN_DIR    merge per-run series into one long-format objective table

Exit codes: 0 ok, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import ALGORITHMS, get_algorithm
from .core import SolverConfig, solve
from .errors import ConfigurationError, InputError, PCVIError
from .perturbations import PerturbationSchedule, validate_remark56
from .problems import gen_lasso
from .projections import project_l1_ball

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = (
    "run_id", "algorithm", "K", "noise_beta", "epsilon", "seed", "iters",
    "obj_final", "err_final", "wall_ms", "status", "min_rho", "audits_passed",
)
SERIES_COLUMNS = ("k", "residual", "objective", "err", "beta", "rho", "alpha")
PLOT_COLUMNS = ("run_id", "algorithm", "k", "objective")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# keys accepted in "defaults" and per-algorithm "overrides"
SOLVER_KEYS = ("gamma", "nu", "mu", "sigma_ls", "backtrack", "max_iter", "max_backtracks")
SCHEDULE_KEYS = ("alpha", "alpha2", "zeta", "xi", "sigma_r", "delta_r",
                 "budget", "lambda_scale", "perturbation_seed")
PARAM_KEYS = SOLVER_KEYS + SCHEDULE_KEYS

PRESETS = {
    "lasso-k20": dict(m=240, n=1024, K=20),
    "lasso-k30": dict(m=240, n=1024, K=30),
    "lasso-k40": dict(m=240, n=1024, K=40),
    "lasso-small": dict(m=40, n=128, K=5),
}

# admissible constant-inertia triple for alpha = 0.79 (gamma cap ~0.04595)
R56_DEFAULTS = {"alpha": 0.79, "sigma_r": 1e-6, "delta_r": 8.83, "gamma": 0.045}


def fmt(v):
    """Shortest round-trip text for CSV cells; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    m: int
    n: int
    K: list
    noise_beta: list
    seeds: list
    algorithms: list
    epsilon: list
    output_dir: str
    t_policy: object = "exact"
    noise_mode: str = "std"
    defaults: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    audit: bool = True

    def cells(self):
        """All runs in a fixed order: K, noise, seed, algorithm, epsilon."""
        for K in self.K:
            for nb in self.noise_beta:
                for seed in self.seeds:
                    for alg in self.algorithms:
                        for eps in self.epsilon:
                            yield dict(K=K, noise_beta=nb, seed=seed, algorithm=alg, epsilon=eps)

    def params_for(self, algorithm):
        p = dict(self.defaults)
        if algorithm == "ipc1-r56":
            for key, val in R56_DEFAULTS.items():
                p.setdefault(key, val)
        p.update(self.overrides.get(algorithm, {}))
        return p


def _field(raw, name, kind, default=None, required=False):
    if name not in raw:
        if required:
            raise ConfigurationError(f"config field {name!r} is required")
        return default
    val = raw[name]
    if kind == "list" and not isinstance(val, list):
        val = [val]
    if kind == "int" and not (isinstance(val, int) and not isinstance(val, bool)):
        raise ConfigurationError(f"config field {name!r} must be an integer, got {val!r}")
    return val


def _check_params(where, params):
    if not isinstance(params, dict):
        raise ConfigurationError(f"config field {where!r} must be an object")
    for key, val in params.items():
        if key not in PARAM_KEYS:
            raise ConfigurationError(f"config field {where}.{key}: unknown parameter")
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigurationError(f"config field {where}.{key} must be a number, got {val!r}")


def parse_config(text):
    """Parse and validate a JSON experiment description."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    known = {"instance", "algorithms", "epsilon", "output_dir", "defaults", "overrides", "audit", "schema"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigurationError(f"unknown config field(s): {', '.join(extra)}")
    inst = raw.get("instance")
    if not isinstance(inst, dict):
        raise ConfigurationError("config field 'instance' is required and must be an object")
    algorithms = _field(raw, "algorithms", "list", required=True)
    if not algorithms:
        raise ConfigurationError("config field 'algorithms' must be a nonempty list")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigurationError(f"config field 'algorithms': unknown id {a!r}")
    seeds = _field(inst, "seeds", "list", required=True)
    if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigurationError("config field 'instance.seeds' must be a nonempty list of nonnegative integers")
    epsilon = _field(raw, "epsilon", "list", [1e-6])
    if not epsilon or not all(isinstance(e, (int, float)) and e > 0 for e in epsilon):
        raise ConfigurationError("config field 'epsilon' must hold positive numbers")
    K = _field(inst, "K", "list", required=True)
    noise = _field(inst, "noise_beta", "list", [0.0])
    defaults = raw.get("defaults", {})
    _check_params("defaults", defaults)
    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigurationError("config field 'overrides' must be an object")
    for alg, params in overrides.items():
        if alg not in ALGORITHMS:
            raise ConfigurationError(f"config field 'overrides': unknown id {alg!r}")
        _check_params(f"overrides.{alg}", params)
    cfg = ExperimentConfig(
        m=_field(inst, "m", "int", 240),
        n=_field(inst, "n", "int", 1024),
        K=K,
        noise_beta=[float(b) for b in noise],
        seeds=seeds,
        algorithms=list(algorithms),
        epsilon=[float(e) for e in epsilon],
        output_dir=str(_field(raw, "output_dir", "str", "runs")),
        t_policy=inst.get("t_policy", "exact"),
        noise_mode=inst.get("noise_mode", "std"),
        defaults=defaults,
        overrides=overrides,
        audit=bool(raw.get("audit", True)),
    )
    # build everything once so bad values fail before any solve starts
    for alg in cfg.algorithms:
        p = cfg.params_for(alg)
        build_solver(alg, p, cfg.epsilon[0], 0)
    for K in cfg.K:
        if not isinstance(K, int) or not 0 <= K <= cfg.n:
            raise ConfigurationError(f"config field 'instance.K': need integers in [0, n], got {K!r}")
    if not cfg.m < cfg.n:
        raise ConfigurationError("config fields 'instance.m' and 'instance.n' need m < n")
    return cfg


def build_solver(algorithm, params, epsilon, seed):
    """Translate flat parameters into ``(SolverConfig, schedule or None)``."""
    algo = get_algorithm(algorithm)
    kw = dict(epsilon=float(epsilon), seed=int(seed))
    for key in SOLVER_KEYS:
        if key in params:
            name = {"sigma_ls": "sigma_ls", "backtrack": "rho_ls"}.get(key, key)
            kw[name] = int(params[key]) if key in ("max_iter", "max_backtracks") else float(params[key])
    kw.setdefault("max_iter", 50_000)
    config = SolverConfig(**kw)
    schedule = None
    pseed = int(params.get("perturbation_seed", seed))
    if algo.inputs == "outer":
        schedule = PerturbationSchedule.outer(float(params.get("budget", 1.0)), seed=pseed)
    elif algo.inputs == "bounded":
        schedule = PerturbationSchedule.bounded(float(params.get("lambda_scale", 1.0)), seed=pseed)
    elif algo.inputs in ("inertial", "remark56"):
        default = algo.default_schedule()
        a1 = float(params.get("alpha", default.alpha_targets[0]))
        a2 = float(params.get("alpha2", a1))
        schedule = PerturbationSchedule.inertial(
            a1, a2, zeta=params.get("zeta"), xi=float(params.get("xi", 1.0)),
            sigma_r=params.get("sigma_r"), delta_r=params.get("delta_r"),
        )
    algo.validate(config, schedule or algo.default_schedule())
    return config, schedule


# ---------------------------------------------------------------- running


def run_id_for(cell):
    return "{algorithm}_K{K}_nb{noise_beta!r}_eps{epsilon!r}_s{seed}".format(**cell)


def _threads():
    raw = os.environ.get("VI_PC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"VI_PC_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def run_cell(cell, params, m, n, t_policy, noise_mode, audit):
    """One solve; returns ``(summary row dict, series rows)``.

    Solver failures are reported in the status column instead of raised.
    """
    inst = gen_lasso(m, n, cell["K"], cell["noise_beta"], t_policy, cell["seed"], noise_mode)
    problem = inst.to_problem()
    config, schedule = build_solver(cell["algorithm"], params, cell["epsilon"], cell["seed"])
    row = dict(cell, run_id=run_id_for(cell))
    t0 = time.perf_counter()
    try:
        report = solve(problem, cell["algorithm"], config, schedule, audit=audit)
    except PCVIError as exc:
        row.update(iters=None, obj_final=None, err_final=None, status=type(exc).__name__,
                   min_rho=None, audits_passed=False)
        row["wall_ms"] = (time.perf_counter() - t0) * 1e3
        return row, []
    row["wall_ms"] = (time.perf_counter() - t0) * 1e3
    x_true = inst.x_true
    series = [
        (r.k, r.residual, r.objective, float(np.linalg.norm(r.x - x_true)), r.beta, r.rho, r.alpha)
        for r in report.trace
    ]
    row.update(
        iters=report.iterations,
        obj_final=problem.objective(report.x_final),
        err_final=float(np.linalg.norm(report.x_final - x_true)),
        status=report.status.value,
        min_rho=report.min_rho,
        audits_passed=report.audits_passed,
    )
    return row, series


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def summary_csv(rows):
    return _csv_text(SUMMARY_COLUMNS, ([r[c] for c in SUMMARY_COLUMNS] for r in rows))


def series_csv(series):
    return _csv_text(SERIES_COLUMNS, series)


def _cell_job(args):
    return run_cell(*args)


def run_bench(config_path):
    """Run a configuration file; returns the summary rows."""
    path = Path(config_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {config_path}: {exc}") from None
    cfg = parse_config(text)
    out = Path(cfg.output_dir)
    if not out.is_absolute():
        out = path.parent / out
    series_dir = out / "series"
    series_dir.mkdir(parents=True, exist_ok=True)

    cells = list(cfg.cells())
    jobs = [
        (c, cfg.params_for(c["algorithm"]), cfg.m, cfg.n, cfg.t_policy, cfg.noise_mode, cfg.audit)
        for c in cells
    ]
    threads = _threads()
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]

    rows = []
    for row, series in results:
        (series_dir / f"{row['run_id']}.csv").write_text(series_csv(series))
        rows.append(row)
    (out / "summary.csv").write_text(summary_csv(rows))
    manifest = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "numpy": np.__version__,
        "config": asdict(cfg),
        "resolved_params": {a: cfg.params_for(a) for a in cfg.algorithms},
        "runs": [{"run_id": r["run_id"], "algorithm": r["algorithm"], "series": f"series/{r['run_id']}.csv"}
                 for r in rows],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return rows


def emit_plot_series(run_dir):
    """Write ``plot_series.csv`` (run_id, algorithm, k, objective) under ``run_dir``.

    Runs whose series carry no objective values are skipped with a notice on
    stderr. Returns the path of the merged file.
    """
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"no manifest.json in {run_dir}")
    runs = json.loads(manifest_path.read_text())["runs"]
    rows = []
    for run in runs:
        p = run_dir / run["series"]
        if not p.exists():
            raise InputError(f"missing series file {p}")
        with p.open(newline="") as fh:
            data = list(csv.DictReader(fh))
        if not data or any(d["objective"] == "" for d in data):
            print(f"notice: {run['run_id']} has no objective values; skipped", file=sys.stderr)
            continue
        rows.extend((run["run_id"], run["algorithm"], d["k"], d["objective"]) for d in data)
    target = run_dir / "plot_series.csv"
    target.write_text(_csv_text(PLOT_COLUMNS, rows))
    return target


# ---------------------------------------------------------------- argparse


def _add_params(p):
    p.add_argument("--gamma", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma-ls", type=float, dest="sigma_ls")
    p.add_argument("--backtrack", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--max-backtracks", type=int, dest="max_backtracks")
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--sigma-r", type=float, dest="sigma_r")
    p.add_argument("--delta-r", type=float, dest="delta_r")
    p.add_argument("--budget", type=float)
    p.add_argument("--lambda-scale", type=float, dest="lambda_scale")


def build_parser():
    parser = argparse.ArgumentParser(prog="pcvi", description="Projection-and-contraction VI solvers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a JSON experiment configuration")
    b.add_argument("config")

    s = sub.add_parser("solve", help="solve one sparse-recovery instance")
    s.add_argument("--alg", required=True)
    s.add_argument("--preset", choices=sorted(PRESETS), default="lasso-k20")
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--series", help="write the per-iteration series CSV here")
    s.add_argument("--no-audit", action="store_true")
    _add_params(s)

    pr = sub.add_parser("project", help="l1-ball projection of a vector read from stdin")
    pr.add_argument("--l1", type=float, required=True, metavar="T")

    v = sub.add_parser("validate-r56", help="check a constant-inertia parameter triple")
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--sigma", type=float, required=True)
    v.add_argument("--delta", type=float, required=True)

    ps = sub.add_parser("plot-series", help="merge series CSVs of a bench run")
    ps.add_argument("run_dir")
    return parser


def _cmd_solve(args, out):
    if args.alg not in ALGORITHMS:
        raise InputError(f"unknown algorithm {args.alg!r}; expected one of {', '.join(ALGORITHMS)}")
    shape = dict(PRESETS[args.preset])
    for key in ("m", "n", "K"):
        if getattr(args, key) is not None:
            shape[key] = getattr(args, key)
    params = {}
    if args.alg == "ipc1-r56":
        params["gamma"] = R56_DEFAULTS["gamma"]
        if args.alpha is None:
            params.update(alpha=R56_DEFAULTS["alpha"], sigma_r=R56_DEFAULTS["sigma_r"],
                          delta_r=R56_DEFAULTS["delta_r"])
    for key in PARAM_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    cell = dict(K=shape["K"], noise_beta=args.noise, seed=args.seed, algorithm=args.alg, epsilon=args.eps)
    try:
        gen_lasso(shape["m"], shape["n"], shape["K"], args.noise, seed=args.seed)
    except InputError as exc:
        raise ConfigurationError(str(exc)) from None
    build_solver(args.alg, params, args.eps, args.seed)
    row, series = run_cell(cell, params, shape["m"], shape["n"], "exact", "std", not args.no_audit)
    out.write(summary_csv([row]))
    if args.series:
        Path(args.series).write_text(series_csv(series))
    return EXIT_OK if row["iters"] is not None else EXIT_RUNTIME


def _cmd_project(args, stdin, out):
    text = stdin.read().split()
    try:
        v = np.array([float(tok) for tok in text])
    except ValueError as exc:
        raise InputError(f"could not parse vector: {exc}") from None
    if v.size == 0:
        raise InputError("empty vector on stdin")
    out.write(" ".join(repr(float(c)) for c in project_l1_ball(v, args.l1)) + "\n")
    return EXIT_OK


def main(argv=None, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "bench":
            rows = run_bench(args.config)
            out.write(summary_csv(rows))
            return EXIT_OK
        if args.command == "solve":
            return _cmd_solve(args, out)
        if args.command == "project":
            return _cmd_project(args, stdin, out)
        if args.command == "validate-r56":
            cap = validate_remark56(args.alpha, args.sigma, args.delta)
            out.write(f"admissible: gamma <= {cap!r}\n")
            return EXIT_OK
        if args.command == "plot-series":
            out.write(f"{emit_plot_series(args.run_dir)}\n")
            return EXIT_OK
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PCVIError, OSError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

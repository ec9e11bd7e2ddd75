"""Command-line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 unreadable or
malformed input, 4 infeasible request or refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

from . import experiments
from .core import FLOWTIME, SLOWDOWN, Instance, SpeedupParams, WeightScheme
from .errors import (
    ConfigError,
    DomainError,
    InstanceParseError,
    OracleRefusal,
    PreconditionError,
    SimulationError,
)
from .optimal import offline_schedule, optimal_allocation, optimal_flow_time, optimal_omegas
from .oracle import brute_force_optimum, is_sjf
from .plotting import sweep_figures
from .policies import POLICY_NAMES, make_policy
from .simulator import simulate
from .workloads import (
    RNG_ALGORITHM,
    AllAtZero,
    Uniform,
    WorkloadSpec,
    format_instance,
    generate,
    parse_arrivals,
    parse_dist,
    read_jobs,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_REFUSED = 0, 2, 3, 4

RESULT_HEADER = ("job_id", "arrival", "completion", "flow_time", "slowdown")
ORACLE_HEADER = ("seed", "M", "p", "objective_closed_form", "objective_oracle", "rel_gap", "order_is_sjf")


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    return repr(float(x))  # shortest round-trip form


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError("empty number list")
    return vals


def _single_p(args) -> float:
    ps = _floats(args.p)
    if len(ps) != 1:
        raise ConfigError("this command takes a single --p value")
    return ps[0]


def parse_knee_grid(text: str) -> tuple[float, float, int]:
    """``LO:HI:N`` log-spaced multipliers of mean size over s(N), or one multiplier."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return (v, v, 1)
        if len(parts) == 3:
            return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse KNEE grid {text!r}; use LO:HI:N or a single multiplier")


def _jobs_from_args(args, params):
    if args.instance:
        return read_jobs(args.instance)
    spec = WorkloadSpec(args.jobs, parse_dist(args.dist), parse_arrivals(args.arrivals), args.seed)
    return generate(spec, params)


def _instance(args, params) -> Instance:
    jobs = read_jobs(args.instance) if args.instance else generate(
        WorkloadSpec(args.jobs, parse_dist(args.dist), AllAtZero(), args.seed), params)
    return Instance.create(jobs, params, args.objective)


# ---- commands ---------------------------------------------------------------

def cmd_allocate(args) -> int:
    params = SpeedupParams(_single_p(args), args.servers)
    inst = _instance(args, params)
    alloc = optimal_allocation(inst)
    omegas = optimal_omegas(inst).as_dict()
    rows = [(int(j.id), j.size, inst.weights.weights[j.id], alloc[j.id], omegas[j.id]) for j in inst.jobs]
    text = csv_text(("job_id", "size", "weight", "theta", "omega"), rows)
    sys.stdout.write(text)
    total = optimal_flow_time(inst)
    print(f"# objective={args.objective} weighted_flow_time={fmt(total)}")
    if args.out:
        _write(Path(args.out) / "allocation.csv", text)
    return EXIT_OK


def cmd_schedule(args) -> int:
    params = SpeedupParams(_single_p(args), args.servers)
    inst = _instance(args, params)
    sched = offline_schedule(inst)
    ids = [int(i) for i in inst.ids]
    header = ("start", "end") + tuple(f"alloc_job_{i}" for i in ids)
    rows = [(ph.start, ph.end, *(ph.allocation[i] for i in ids)) for ph in sched.phases]
    text = csv_text(header, rows)
    sys.stdout.write(text)
    print(f"# completion_order={' '.join(map(str, sched.completion_order))} "
          f"weighted_flow_time={fmt(sched.objective)}")
    if args.out:
        _write(Path(args.out) / "schedule.csv", text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = SpeedupParams(_single_p(args), args.servers)
    jobs = _jobs_from_args(args, params)
    config = {"quanta.G": args.quanta}
    if args.knee_alpha is not None:
        config["knee.alpha"] = args.knee_alpha
    policy = make_policy(args.policy, config)
    weights = WeightScheme.for_objective(args.objective, jobs, params)
    res = simulate(jobs, policy, params, weights, trace=args.trace, warmup=args.warmup)
    order = sorted(range(len(res.ids)), key=lambda i: res.ids[i])
    rows = [(int(res.ids[i]), res.arrivals[i], res.completions[i], res.flow_times[i], res.slowdowns[i])
            for i in order]
    text = csv_text(RESULT_HEADER, rows)
    summary = (f"# policy={args.policy} mean_slowdown={fmt(res.mean_slowdown)} "
               f"mean_flow_time={fmt(res.mean_flow_time)} weighted_flow_time={fmt(res.weighted_flow_time)}")
    if args.out:
        out = Path(args.out)
        _write(out / "result.csv", text)
        if args.trace:
            all_ids = sorted(int(i) for i in res.ids)
            header = ("time", "event", "job_id") + tuple(f"alloc_job_{i}" for i in all_ids)
            trows = []
            for r in res.trace:
                d = r.allocation.as_dict() if r.allocation is not None else {}
                trows.append((r.time, r.event, r.job_id, *(d.get(i, 0.0) for i in all_ids)))
            _write(out / "trace.csv", csv_text(header, trows))
    else:
        sys.stdout.write(text)
    print(summary)
    return EXIT_OK


def _sweep_config(args, online: bool):
    overrides = {"seed": args.seed, "objective": args.objective, "quanta": args.quanta}
    if args.p:
        overrides["p_grid"] = _floats(args.p)
    if args.servers is not None:
        overrides["n_servers"] = args.servers
    if args.jobs is not None:
        overrides["m_jobs"] = args.jobs
    if args.dist:
        overrides["size_dist"] = parse_dist(args.dist)
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.policy:
        names = tuple(n.strip() for n in args.policy.split(","))
        unknown = [n for n in names if n not in POLICY_NAMES]
        if unknown:
            raise ConfigError(f"unknown policies {unknown}; choose from {', '.join(POLICY_NAMES)}")
        overrides["policies"] = names
    if args.knee_grid:
        overrides["knee_span"] = parse_knee_grid(args.knee_grid)
    if online:
        if args.loads:
            overrides["loads"] = _floats(args.loads)
        return experiments.online_config(desk=args.desk, **overrides)
    return experiments.offline_config(desk=args.desk, **overrides)


def _run_compare(args, online: bool) -> int:
    cfg = _sweep_config(args, online)
    out = Path(args.out)
    started = time.perf_counter()

    def progress(key):
        p, load, rep = key
        where = f"p={p:g}" + ("" if load is None else f" load={load:g}")
        print(f"[{cfg.setting}] {where} rep {rep + 1}/{cfg.reps}", file=sys.stderr)

    result = experiments.run_sweep(cfg, progress=progress if args.verbose else None)
    cols = experiments.RESULT_COLUMNS
    _write(out / "results.csv", csv_text(cols, ([r[c] if c not in ("load",) else
                                                   ("" if r[c] is None else fmt(r[c])) for c in cols]
                                                  for r in result.rows)))
    if result.knee_scores:
        kcols = ("p", "load", "alpha", "score", "chosen")
        _write(out / "knee_tuning.csv", csv_text(kcols, (
            [r["p"], "" if r["load"] is None else fmt(r["load"]), r["alpha"], r["score"], r["chosen"]]
            for r in result.knee_scores)))
    figs = sweep_figures(result, out, metric="mean_slowdown" if cfg.objective == SLOWDOWN else "mean_flow_time")
    for r in result.rows:
        where = f"p={r['p']:g}" + ("" if r["load"] is None else f" load={r['load']:g}")
        print(f"{where:<18} {r['policy']:<7} slowdown={r['mean_slowdown']:.6g}"
              f" +- {r['stderr_slowdown']:.3g}  ratio={r['ratio_to_hesrpt']:.4g}")
    print(f"# wrote {out / 'results.csv'} and {len(figs)} SVG figures "
          f"({time.perf_counter() - started:.1f}s, rng {RNG_ALGORITHM})", file=sys.stderr)
    return EXIT_OK


def cmd_compare_offline(args) -> int:
    return _run_compare(args, online=False)


def cmd_compare_online(args) -> int:
    return _run_compare(args, online=True)


def oracle_rows(m: int, count: int, seed: int, p_values, objective: str, n_servers: float,
                dist=None, resolution: float = 1.0 / 200):
    """Closed form versus brute force on ``count`` seeded batches per p."""
    dist = dist or Uniform(1.0, 10.0)
    rows = []
    for p in p_values:
        params = SpeedupParams(p, n_servers)
        for s in range(seed, seed + count):
            jobs = generate(WorkloadSpec(m, dist, AllAtZero(), s))
            inst = Instance.create(jobs, params, objective)
            closed = optimal_flow_time(inst)
            res = brute_force_optimum(inst, resolution=resolution)
            rows.append((s, m, p, closed, res.objective, (res.objective - closed) / closed,
                         is_sjf(inst, res.order)))
    return rows


def cmd_oracle(args) -> int:
    n = args.servers if args.servers is not None else 1e6
    if args.instance:
        params = SpeedupParams(_single_p(args), n)
        inst = Instance.create(read_jobs(args.instance), params, args.objective)
        closed = optimal_flow_time(inst)
        res = brute_force_optimum(inst, resolution=args.resolution)
        rows = [(args.seed, len(inst), params.p, closed, res.objective,
                 (res.objective - closed) / closed, is_sjf(inst, res.order))]
    else:
        m = args.jobs if args.jobs is not None else 3
        rows = oracle_rows(m, args.count, args.seed, _floats(args.p), args.objective, n,
                           parse_dist(args.dist) if args.dist else None, args.resolution)
    text = csv_text(ORACLE_HEADER, rows)
    if args.out:
        _write(Path(args.out) / "oracle.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_gen(args) -> int:
    params = SpeedupParams(_single_p(args), args.servers)
    arrivals = parse_arrivals(args.arrivals)
    jobs = generate(WorkloadSpec(args.jobs, parse_dist(args.dist), arrivals, args.seed), params)
    text = format_instance(jobs)
    if args.out:
        _write(Path(args.out) / "instance.csv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---- parser -----------------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hesrpt", description="Optimal server allocation for parallelizable jobs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, p_default="0.5", servers_default=1e6, objective_default=SLOWDOWN):
        sp.add_argument("--p", default=p_default, help="speedup exponent (comma list for sweeps)")
        sp.add_argument("--servers", type=float, default=servers_default, help="server count N")
        sp.add_argument("--objective", choices=(SLOWDOWN, FLOWTIME), default=objective_default)
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--out", help="output directory")

    def workload(sp, jobs_default=None, dist_default="pareto:1.5"):
        sp.add_argument("--instance", help="instance CSV (job_id,size,arrival_time)")
        sp.add_argument("--jobs", type=_positive_int, default=jobs_default, help="number of jobs to draw")
        sp.add_argument("--dist", default=dist_default, help="pareto:alpha[:scale] | uniform:a:b | det:v")

    sp = sub.add_parser("allocate", help="optimal allocations, scale-free constants and objective at t=0")
    common(sp, objective_default=FLOWTIME)
    workload(sp, jobs_default=5)
    sp.set_defaults(func=cmd_allocate)

    sp = sub.add_parser("schedule", help="full optimal offline schedule, phase by phase")
    common(sp, objective_default=FLOWTIME)
    workload(sp, jobs_default=5)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("simulate", help="run one policy on one instance")
    common(sp)
    workload(sp, jobs_default=100)
    sp.add_argument("--arrivals", default="batch", help="batch | poisson:lambda | load:rho")
    sp.add_argument("--policy", default="hesrpt", choices=POLICY_NAMES)
    sp.add_argument("--quanta", type=_positive_int, default=1000, help="quanta G for HELL/KNEE")
    sp.add_argument("--knee-alpha", type=float, default=None, help="KNEE threshold")
    sp.add_argument("--warmup", type=int, default=0, help="arrivals excluded from aggregates")
    sp.add_argument("--trace", action="store_true", help="also write trace.csv (needs --out)")
    sp.set_defaults(func=cmd_simulate)

    for name, online, func in (("compare-offline", False, cmd_compare_offline),
                               ("compare-online", True, cmd_compare_online)):
        sp = sub.add_parser(name, help=f"{'online' if online else 'offline'} policy comparison sweep")
        sp.add_argument("--p", default=None, help="comma-separated p grid")
        sp.add_argument("--servers", type=float, default=None)
        sp.add_argument("--jobs", type=_positive_int, default=None)
        sp.add_argument("--dist", default=None)
        sp.add_argument("--objective", choices=(SLOWDOWN, FLOWTIME), default=SLOWDOWN)
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--reps", type=_positive_int, default=None)
        sp.add_argument("--policy", default=None, help="comma-separated policy list")
        sp.add_argument("--quanta", type=_positive_int, default=1000)
        sp.add_argument("--knee-grid", default=None, help="LO:HI:N multipliers of mean size / s(N)")
        sp.add_argument("--desk", action="store_true", help="reduced preset for quick runs")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
        if online:
            sp.add_argument("--loads", default=None, help="comma-separated target loads")
        sp.set_defaults(func=func)

    sp = sub.add_parser("oracle", help="closed form versus brute-force optimum on small batches")
    sp.add_argument("--p", default="0.3,0.5,0.9")
    sp.add_argument("--servers", type=float, default=None)
    sp.add_argument("--objective", choices=(SLOWDOWN, FLOWTIME), default=FLOWTIME)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--instance", help="single instance CSV instead of seeded draws")
    sp.add_argument("--jobs", type=int, default=None, help="jobs per instance (at most 4)")
    sp.add_argument("--count", type=_positive_int, default=5, help="instances per p")
    sp.add_argument("--dist", default=None, help="size distribution (default uniform:1:10)")
    sp.add_argument("--resolution", type=float, default=1.0 / 200, help="grid step")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="draw a seeded instance CSV")
    common(sp)
    sp.add_argument("--jobs", type=_positive_int, default=10)
    sp.add_argument("--dist", default="pareto:1.5")
    sp.add_argument("--arrivals", default="batch")
    sp.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, OracleRefusal, SimulationError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())

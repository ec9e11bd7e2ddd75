"""Offline and online policy comparisons (mean slowdown / mean flow time sweeps).

A sweep is split into independent work units, one per (p, load, replication).
Each unit draws one workload and runs every policy on it, plus KNEE once per
threshold in the grid. Thresholds are tuned per cell afterwards on the mean
objective over replications, so reported KNEE numbers are optimistic.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import SLOWDOWN, SpeedupParams, WeightScheme
from .errors import ConfigError
from .policies import KNEE, knee_tune_alpha, make_policy
from .simulator import simulate
from .workloads import (
    RNG_ALGORITHM,
    AllAtZero,
    Pareto,
    TargetLoad,
    WorkloadSpec,
    generate,
)

OFFLINE_POLICIES = ("hesrpt", "srpt", "equi", "hell", "knee")
ONLINE_POLICIES = ("hesrpt", "srpt", "rs", "equi", "hell", "knee")
OFFLINE_P_GRID = (0.05, 0.25, 0.5, 0.75, 0.9, 0.99)
ONLINE_P_GRID = (0.1, 0.5, 0.9)
KNEE_GRID_SPAN = (1e-6, 1e2, 30)

RESULT_COLUMNS = (
    "setting", "p", "load", "policy", "reps",
    "mean_slowdown", "stderr_slowdown", "mean_flow_time", "stderr_flow_time",
    "ratio_to_hesrpt", "knee_alpha", "quanta", "n_servers", "jobs", "seed", "rng",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep. ``loads`` is ``(None,)`` for offline batches."""

    setting: str = "offline"
    policies: tuple[str, ...] = OFFLINE_POLICIES
    p_grid: tuple[float, ...] = OFFLINE_P_GRID
    n_servers: float = 1e6
    m_jobs: int = 500
    size_dist: object = Pareto(0.8)
    loads: tuple = (None,)
    objective: str = SLOWDOWN
    reps: int = 20
    seed: int = 0
    quanta: int = 1000
    knee_span: tuple[float, float, int] = KNEE_GRID_SPAN
    warmup_fraction: float = 0.1
    hesrpt_rank_by: str = "weighted"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("replications must be >= 1")
        if self.setting not in ("offline", "online"):
            raise ConfigError(f"unknown setting {self.setting!r}")
        for p in self.p_grid:
            SpeedupParams(p, self.n_servers)  # validates p against core bounds
        if self.setting == "online" and any(rho is None for rho in self.loads):
            raise ConfigError("online sweeps need target loads")
        if self.setting == "offline" and tuple(self.loads) != (None,):
            raise ConfigError("offline sweeps are batches; loads must be (None,)")
        lo, hi, n = self.knee_span
        if not (0 < lo <= hi and int(n) >= 1):
            raise ConfigError(f"bad KNEE grid span {self.knee_span}")

    @property
    def warmup(self) -> int:
        return int(math.floor(self.warmup_fraction * self.m_jobs)) if self.setting == "online" else 0

    def workload(self, load, rep: int) -> WorkloadSpec:
        arrivals = AllAtZero() if load is None else TargetLoad(load)
        return WorkloadSpec(self.m_jobs, self.size_dist, arrivals, self.seed + rep)


def offline_config(desk: bool = False, **overrides) -> ExperimentConfig:
    base = ExperimentConfig()
    if desk:
        base = replace(base, m_jobs=100, reps=20)
    return replace(base, **overrides)


ONLINE_DESK_JOBS = 2222  # 222 warm-up arrivals + 2000 measured


def online_config(desk: bool = False, **overrides) -> ExperimentConfig:
    base = ExperimentConfig(
        setting="online",
        policies=ONLINE_POLICIES,
        p_grid=ONLINE_P_GRID,
        n_servers=1e4,
        m_jobs=10_000,
        size_dist=Pareto(1.5),
        loads=(0.4, 0.8),
        reps=10,
    )
    if desk:
        base = replace(base, m_jobs=ONLINE_DESK_JOBS)
    return replace(base, **overrides)


def knee_grid_for(cfg: ExperimentConfig, params: SpeedupParams, mean_size: float) -> list[float]:
    lo, hi, n = cfg.knee_span
    scale = mean_size / params.full_rate
    if int(n) == 1:
        return [lo * scale]
    return [float(a) for a in np.logspace(math.log10(lo), math.log10(hi), int(n)) * scale]


def _mean_size(cfg: ExperimentConfig) -> float:
    mean = getattr(cfg.size_dist, "mean", math.inf)
    if math.isfinite(mean):
        return float(mean)
    # infinite-mean sizes: use the sample mean over every replication's batch
    sizes = [j.size for rep in range(cfg.reps) for j in generate(cfg.workload(None, rep))]
    return float(np.mean(sizes))


def _run_unit(task):
    cfg, p, load, rep, knee_grid = task
    params = SpeedupParams(p, cfg.n_servers)
    jobs = generate(cfg.workload(load, rep), params)
    weights = WeightScheme.for_objective(cfg.objective, jobs, params)
    config = {"quanta.G": cfg.quanta, "hesrpt.rank_by": cfg.hesrpt_rank_by}
    out = {}
    for name in cfg.policies:
        if name == "knee":
            continue
        res = simulate(jobs, make_policy(name, config), params, weights, warmup=cfg.warmup)
        out[name] = (res.mean_slowdown, res.mean_flow_time)
    knee = []
    if "knee" in cfg.policies:
        for alpha in knee_grid:
            res = simulate(jobs, KNEE(alpha, cfg.quanta), params, weights, warmup=cfg.warmup)
            knee.append((res.mean_slowdown, res.mean_flow_time))
    return (p, load, rep), out, knee


def worker_count() -> int:
    cap = os.environ.get("HESRPT_THREADS")
    cpus = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(int(cap), cpus))
        except ValueError:
            raise ConfigError(f"HESRPT_THREADS must be an integer, got {cap!r}") from None
    return cpus


def _stats(values):
    v = np.asarray(values, dtype=float)
    err = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), err


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict]
    knee_scores: list[dict]

    def cell(self, p, load=None) -> dict[str, dict]:
        return {r["policy"]: r for r in self.rows if r["p"] == p and r["load"] == load}


def run_sweep(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> SweepResult:
    """Run every (p, load, replication) unit and aggregate into result rows."""
    mean_size = _mean_size(cfg)
    grids = {p: knee_grid_for(cfg, SpeedupParams(p, cfg.n_servers), mean_size) for p in cfg.p_grid}
    tasks = [
        (cfg, p, load, rep, grids[p] if "knee" in cfg.policies else [])
        for p in cfg.p_grid for load in cfg.loads for rep in range(cfg.reps)
    ]
    workers = worker_count() if workers is None else workers
    results = {}
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, out, knee in pool.map(_run_unit, tasks):
                results[key] = (out, knee)
                if progress:
                    progress(key)
    else:
        for task in tasks:
            key, out, knee = _run_unit(task)
            results[key] = (out, knee)
            if progress:
                progress(key)

    metric_idx = 0 if cfg.objective == SLOWDOWN else 1
    rows, knee_rows = [], []
    for p in cfg.p_grid:
        for load in cfg.loads:
            units = [results[(p, load, r)] for r in range(cfg.reps)]
            per_policy = {}
            alpha_for = {}
            for name in cfg.policies:
                if name == "knee":
                    grid = grids[p]
                    best, scores = _tune(units, grid, metric_idx)
                    k = grid.index(best)
                    per_policy[name] = [u[1][k] for u in units]
                    alpha_for[name] = best
                    for a, s in zip(grid, scores):
                        knee_rows.append({"p": p, "load": load, "alpha": a, "score": s, "chosen": int(a == best)})
                else:
                    per_policy[name] = [u[0][name] for u in units]
            base = None
            if "hesrpt" in per_policy:
                base = _stats([v[metric_idx] for v in per_policy["hesrpt"]])[0]
            for name in cfg.policies:
                sd, sd_err = _stats([v[0] for v in per_policy[name]])
                ft, ft_err = _stats([v[1] for v in per_policy[name]])
                metric = sd if metric_idx == 0 else ft
                rows.append({
                    "setting": cfg.setting, "p": p, "load": load, "policy": name, "reps": cfg.reps,
                    "mean_slowdown": sd, "stderr_slowdown": sd_err,
                    "mean_flow_time": ft, "stderr_flow_time": ft_err,
                    "ratio_to_hesrpt": metric / base if base else math.nan,
                    "knee_alpha": alpha_for.get(name, math.nan),
                    "quanta": cfg.quanta, "n_servers": cfg.n_servers, "jobs": cfg.m_jobs,
                    "seed": cfg.seed, "rng": RNG_ALGORITHM,
                })
    return SweepResult(cfg, rows, knee_rows)


def _tune(units, grid, metric_idx):
    def score(alpha):
        k = grid.index(alpha)
        return float(np.mean([u[1][k][metric_idx] for u in units]))

    return knee_tune_alpha(score, grid)

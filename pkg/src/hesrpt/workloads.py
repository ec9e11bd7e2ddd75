"""Seeded workload generation and instance CSV I/O.

Random streams come from numpy's ``Generator`` with the PCG64 bit generator.
Sizes and arrivals use independent child streams of one ``SeedSequence`` so a
given seed yields the same sizes whatever the arrival process.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .core import FLOWTIME, Instance, Job, SpeedupParams
from .errors import ConfigError, DomainError, InstanceParseError

RNG_ALGORITHM = "numpy.random.Generator(PCG64) via SeedSequence.spawn"
CSV_HEADER = ("job_id", "size", "arrival_time")


@dataclass(frozen=True)
class Pareto:
    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0):
            raise ConfigError(f"Pareto needs alpha > 0 and scale > 0, got {self.alpha}, {self.scale}")

    @property
    def mean(self) -> float:
        if self.alpha <= 1.0:
            return math.inf
        return self.alpha * self.scale / (self.alpha - 1.0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = 1.0 - rng.random(n)  # (0, 1]
        return self.scale * np.power(u, -1.0 / self.alpha)


@dataclass(frozen=True)
class Deterministic:
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ConfigError(f"deterministic size must be positive, got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    def sample(self, rng, n):
        return np.full(n, float(self.value))


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (0 < self.low <= self.high):
            raise ConfigError(f"Uniform needs 0 < low <= high, got {self.low}, {self.high}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def sample(self, rng, n):
        return rng.uniform(self.low, self.high, n)


@dataclass(frozen=True)
class AllAtZero:
    pass


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError(f"Poisson rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class TargetLoad:
    """Poisson arrivals with rate ``rho * s(N) / E[size]``."""

    rho: float

    def __post_init__(self):
        if not (0 < self.rho < 1):
            raise ConfigError(f"target load must lie in (0, 1), got {self.rho}")


SizeDist = Union[Pareto, Deterministic, Uniform]
Arrivals = Union[AllAtZero, Poisson, TargetLoad]


@dataclass(frozen=True)
class WorkloadSpec:
    m_jobs: int
    size_dist: SizeDist
    arrivals: Arrivals = AllAtZero()
    seed: int = 0

    def __post_init__(self):
        if int(self.m_jobs) < 1:
            raise ConfigError(f"need at least one job, got {self.m_jobs}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def with_seed(self, seed: int) -> "WorkloadSpec":
        return WorkloadSpec(self.m_jobs, self.size_dist, self.arrivals, seed)


def arrival_rate(spec: WorkloadSpec, params: SpeedupParams | None) -> float:
    arr = spec.arrivals
    if isinstance(arr, Poisson):
        return arr.rate
    if isinstance(arr, TargetLoad):
        mean = spec.size_dist.mean
        if not math.isfinite(mean):
            raise ConfigError(
                "target load needs a finite mean job size; Pareto with alpha <= 1 has none, "
                "give an explicit Poisson rate instead"
            )
        if params is None:
            raise ConfigError("target load needs speedup parameters to convert load into an arrival rate")
        return arr.rho * params.full_rate / mean
    raise ConfigError("batch workloads have no arrival rate")


def generate(spec: WorkloadSpec, params: SpeedupParams | None = None) -> list[Job]:
    """Draw the jobs of ``spec``; ids run 1..m in arrival order."""
    size_ss, arr_ss = np.random.SeedSequence(int(spec.seed)).spawn(2)
    n = int(spec.m_jobs)
    sizes = spec.size_dist.sample(np.random.Generator(np.random.PCG64(size_ss)), n)
    if isinstance(spec.arrivals, AllAtZero):
        times = np.zeros(n)
    else:
        lam = arrival_rate(spec, params)
        u = 1.0 - np.random.Generator(np.random.PCG64(arr_ss)).random(n)
        times = np.cumsum(-np.log(u) / lam)
    return [Job(i + 1, float(x), float(a)) for i, (x, a) in enumerate(zip(sizes, times))]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_instance(jobs: Iterable[Job]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for j in sorted(jobs, key=lambda j: j.id):
        writer.writerow((j.id, _fmt(j.size), _fmt(j.arrival_time)))
    return buf.getvalue()


def write_instance(path, jobs) -> None:
    """Write jobs (or an ``Instance``) as ``job_id,size,arrival_time`` CSV."""
    if isinstance(jobs, Instance):
        jobs = jobs.jobs
    Path(path).write_text(format_instance(jobs), encoding="utf-8", newline="")


def parse_instance(text: str) -> list[Job]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise InstanceParseError(f"missing header {','.join(CSV_HEADER)}", line=1)
    jobs = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InstanceParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            job_id = int(row[0])
            size = float(row[1])
            arrival = float(row[2])
        except ValueError as exc:
            raise InstanceParseError(str(exc), line=lineno) from None
        if job_id in seen:
            raise InstanceParseError(f"duplicate job id {job_id}", line=lineno)
        if not (size > 0 and math.isfinite(size)):
            raise InstanceParseError(f"size must be positive, got {row[1]}", line=lineno)
        if not (arrival >= 0 and math.isfinite(arrival)):
            raise InstanceParseError(f"arrival time must be nonnegative, got {row[2]}", line=lineno)
        seen.add(job_id)
        jobs.append(Job(job_id, size, arrival))
    if not jobs:
        raise InstanceParseError("instance has no jobs")
    return jobs


def read_jobs(path) -> list[Job]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InstanceParseError(f"not UTF-8: {exc}") from None
    return parse_instance(text)


def read_instance(path, params: SpeedupParams, objective: str = FLOWTIME) -> Instance:
    jobs = read_jobs(path)
    try:
        return Instance.create(jobs, params, objective)
    except DomainError as exc:
        raise InstanceParseError(str(exc)) from None


def parse_dist(text: str) -> SizeDist:
    """``pareto:alpha[:scale]``, ``uniform:low:high`` or ``det:value``."""
    parts = text.strip().lower().split(":")
    try:
        vals = [float(v) for v in parts[1:]]
        if parts[0] == "pareto" and len(vals) in (1, 2):
            return Pareto(*vals)
        if parts[0] == "uniform" and len(vals) == 2:
            return Uniform(*vals)
        if parts[0] in ("det", "deterministic") and len(vals) <= 1:
            return Deterministic(*vals)
    except ValueError:
        pass
    raise ConfigError(f"cannot parse size distribution {text!r}")


def parse_arrivals(text: str) -> Arrivals:
    """``batch``, ``poisson:lambda`` or ``load:rho``."""
    parts = text.strip().lower().split(":")
    try:
        if parts == ["batch"]:
            return AllAtZero()
        if parts[0] == "poisson" and len(parts) == 2:
            return Poisson(float(parts[1]))
        if parts[0] == "load" and len(parts) == 2:
            return TargetLoad(float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse arrival process {text!r}")

"""Domain types and the speedup / weight / objective algebra.

Servers are one continuously divisible resource of size ``N``. A job holding a
fraction ``theta`` of the system is served at rate ``s(theta * N)`` where
``s(k) = k**p`` with ``0 < p < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, FitError, PreconditionError

SLOWDOWN = "slowdown"
FLOWTIME = "flowtime"
CUSTOM = "custom"
WEIGHT_KINDS = (SLOWDOWN, FLOWTIME, CUSTOM)

DEFAULT_P_RANGE = (0.01, 0.995)
ALLOC_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SpeedupParams:
    """Exponent ``p`` of ``s(k) = k**p`` and the server count ``N``.

    ``p_range`` bounds ``p`` at construction. Pass ``p_range=(0.0, 1.0)`` to
    accept anything strictly inside the unit interval.
    """

    p: float
    n_servers: float
    p_range: tuple[float, float] = field(default=DEFAULT_P_RANGE, compare=False, repr=False)

    def __post_init__(self):
        p = float(self.p)
        n = float(self.n_servers)
        lo, hi = self.p_range
        if not (0.0 < p < 1.0):
            raise DomainError(f"speedup exponent p must lie strictly in (0, 1), got {p}")
        if not (lo <= p <= hi):
            raise DomainError(f"speedup exponent p={p} outside allowed range [{lo}, {hi}]")
        if not (n > 0.0 and math.isfinite(n)):
            raise DomainError(f"n_servers must be positive and finite, got {n}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n_servers", n)

    @property
    def full_rate(self) -> float:
        """``s(N)``: service rate of a job holding the whole system."""
        return self.n_servers ** self.p

    @property
    def exponent(self) -> float:
        """``1 / (1 - p)``, the power used by the closed forms."""
        return 1.0 / (1.0 - self.p)

    def rate(self, fractions):
        """Vectorised ``s(fraction * N)`` without domain checks (hot path)."""
        return np.power(np.asarray(fractions, dtype=float) * self.n_servers, self.p)


def speedup(params: SpeedupParams, fraction: float) -> float:
    """Service rate ``(fraction * N) ** p`` of a job holding ``fraction`` of the system."""
    fraction = float(fraction)
    if not (0.0 <= fraction <= 1.0):
        raise DomainError(f"allocation fraction must lie in [0, 1], got {fraction}")
    if fraction == 0.0:
        return 0.0
    return (fraction * params.n_servers) ** params.p


def ratio_power(ratio, exponent: float):
    """``ratio ** exponent`` for ratios in [0, 1], evaluated as exp(exponent * ln ratio)."""
    ratio = np.asarray(ratio, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(exponent * np.log(ratio))


@dataclass(frozen=True)
class Job:
    id: int
    size: float
    arrival_time: float = 0.0
    remaining: float | None = None

    def __post_init__(self):
        size = float(self.size)
        arrival = float(self.arrival_time)
        if not (size > 0.0 and math.isfinite(size)):
            raise DomainError(f"job {self.id}: size must be positive and finite, got {size}")
        if not (arrival >= 0.0 and math.isfinite(arrival)):
            raise DomainError(f"job {self.id}: arrival time must be nonnegative, got {arrival}")
        remaining = size if self.remaining is None else float(self.remaining)
        if not (0.0 <= remaining <= size):
            raise DomainError(f"job {self.id}: remaining {remaining} outside [0, {size}]")
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "arrival_time", arrival)
        object.__setattr__(self, "remaining", remaining)


def canonical_order(jobs: Iterable[Job]) -> list[Job]:
    """Descending size, ties by ascending id: index 1 is the largest job."""
    return sorted(jobs, key=lambda j: (-j.size, j.id))


@dataclass(frozen=True)
class WeightScheme:
    """Per-job weights ``w_i`` of the weighted-flow-time objective."""

    kind: str
    weights: Mapping[int, float]

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise DomainError(f"unknown weight kind {self.kind!r}")
        clean = {int(k): float(v) for k, v in self.weights.items()}
        for job_id, w in clean.items():
            if not (w > 0.0 and math.isfinite(w)):
                raise DomainError(f"weight for job {job_id} must be positive, got {w}")
        object.__setattr__(self, "weights", clean)

    @classmethod
    def slowdown(cls, jobs: Iterable[Job], params: SpeedupParams) -> "WeightScheme":
        s_n = params.full_rate
        return cls(SLOWDOWN, {j.id: s_n / j.size for j in jobs})

    @classmethod
    def flow_time(cls, jobs: Iterable[Job]) -> "WeightScheme":
        return cls(FLOWTIME, {j.id: 1.0 for j in jobs})

    @classmethod
    def custom(cls, weights: Mapping[int, float]) -> "WeightScheme":
        return cls(CUSTOM, weights)

    @classmethod
    def for_objective(cls, objective: str, jobs: Sequence[Job], params: SpeedupParams) -> "WeightScheme":
        if objective == SLOWDOWN:
            return cls.slowdown(jobs, params)
        if objective == FLOWTIME:
            return cls.flow_time(jobs)
        raise DomainError(f"objective must be {SLOWDOWN!r} or {FLOWTIME!r}, got {objective!r}")

    def weight_of(self, job: Job, params: SpeedupParams | None = None) -> float:
        try:
            return self.weights[job.id]
        except KeyError:
            pass
        if self.kind == FLOWTIME:
            return 1.0
        if self.kind == SLOWDOWN and params is not None:
            return params.full_rate / job.size
        raise DomainError(f"no weight for job {job.id}")

    def favors_small_jobs(self, jobs: Iterable[Job]) -> bool:
        """True when weights are non-decreasing along descending job size."""
        ws = [self.weights[j.id] for j in canonical_order(jobs)]
        return all(a <= b for a, b in zip(ws, ws[1:]))


@dataclass(frozen=True, eq=False)
class AllocationVector:
    """Fractions of the system held by each listed job at one instant."""

    ids: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        fr = np.asarray(self.fractions, dtype=float)
        if ids.shape != fr.shape or ids.ndim != 1:
            raise DomainError("ids and fractions must be 1-d arrays of equal length")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "fractions", fr)

    @classmethod
    def from_mapping(cls, entries: Mapping[int, float]) -> "AllocationVector":
        keys = sorted(entries)
        return cls(np.array(keys, dtype=np.int64), np.array([entries[k] for k in keys], dtype=float))

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(f) for i, f in zip(self.ids, self.fractions)}

    def __getitem__(self, job_id: int) -> float:
        hit = np.flatnonzero(self.ids == job_id)
        return float(self.fractions[hit[0]]) if hit.size else 0.0

    def __eq__(self, other):
        if not isinstance(other, AllocationVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.fractions, other.fractions)

    @property
    def total(self) -> float:
        return float(self.fractions.sum())

    def problems(self, completed_ids: Iterable[int] = ()) -> list[str]:
        """Invariant violations, empty when the vector is valid."""
        out = []
        fr = self.fractions
        if not np.all(np.isfinite(fr)):
            out.append("non-finite fraction")
        elif np.any(fr < 0.0) or np.any(fr > 1.0):
            out.append(f"fraction outside [0, 1]: min={fr.min()!r} max={fr.max()!r}")
        if fr.sum() > 1.0 + ALLOC_SUM_TOL:
            out.append(f"fractions sum to {fr.sum()!r} > 1")
        if len(np.unique(self.ids)) != len(self.ids):
            out.append("duplicate job ids")
        done = set(completed_ids)
        for i, f in zip(self.ids, fr):
            if int(i) in done and f != 0.0:
                out.append(f"completed job {int(i)} holds {f!r}")
        return out


@dataclass(frozen=True)
class Instance:
    """An offline batch: jobs in canonical order, speedup and weights."""

    jobs: tuple[Job, ...]
    speedup: SpeedupParams
    weights: WeightScheme

    def __post_init__(self):
        jobs = canonical_order(self.jobs)
        ids = [j.id for j in jobs]
        if len(set(ids)) != len(ids):
            raise DomainError("job ids must be unique")
        missing = [i for i in ids if i not in self.weights.weights]
        if missing:
            raise DomainError(f"weights missing for jobs {missing}")
        object.__setattr__(self, "jobs", tuple(jobs))

    @classmethod
    def create(cls, jobs: Iterable[Job], params: SpeedupParams, objective: str | WeightScheme = FLOWTIME):
        jobs = list(jobs)
        if isinstance(objective, WeightScheme):
            weights = objective
        else:
            weights = WeightScheme.for_objective(objective, jobs, params)
        return cls(tuple(jobs), params, weights)

    @classmethod
    def from_sizes(cls, sizes: Sequence[float], params: SpeedupParams, objective: str = FLOWTIME):
        jobs = [Job(i + 1, x) for i, x in enumerate(sizes)]
        return cls.create(jobs, params, objective)

    def __len__(self):
        return len(self.jobs)

    @property
    def ids(self) -> np.ndarray:
        return np.array([j.id for j in self.jobs], dtype=np.int64)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([j.size for j in self.jobs], dtype=float)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array([self.weights.weights[j.id] for j in self.jobs], dtype=float)

    @property
    def is_offline(self) -> bool:
        return all(j.arrival_time == 0.0 for j in self.jobs)


def z_prefix(weights: WeightScheme, order: Sequence[int], k: int) -> float:
    """Sum of the first ``k`` weights along ``order`` (a sequence of job ids)."""
    if not (0 <= k <= len(order)):
        raise DomainError(f"k={k} outside [0, {len(order)}]")
    return float(math.fsum(weights.weights[i] for i in order[:k]))


def slowdown_of(job: Job, completion_time: float, params: SpeedupParams) -> float:
    """Flow time divided by the job's runtime on the whole system."""
    if not job.size > 0.0:
        raise DomainError("job size must be positive")
    if completion_time < job.arrival_time:
        raise DomainError(f"completion {completion_time} precedes arrival {job.arrival_time}")
    return (completion_time - job.arrival_time) / (job.size / params.full_rate)


def fit_speedup(points: Sequence[tuple[float, float]], eps: float = 1e-9) -> float:
    """Least-squares exponent of ``speedup = k**p`` through the origin in log-log space."""
    if len(points) < 2:
        raise FitError("need at least two (servers, speedup) points")
    k = np.array([pt[0] for pt in points], dtype=float)
    sp = np.array([pt[1] for pt in points], dtype=float)
    if np.any(k < 1.0) or np.any(sp <= 0.0):
        raise FitError("server counts must be >= 1 and speedups positive")
    if np.all(k == k[0]):
        raise FitError("all points share one server count; exponent is underdetermined")
    lk = np.log(k)
    denom = float(lk @ lk)
    if denom == 0.0:
        raise FitError("all points at k=1; exponent is underdetermined")
    p = float(lk @ np.log(sp)) / denom
    return min(max(p, eps), 1.0 - eps)


def require_favors_small(instance: Instance) -> None:
    if not instance.weights.favors_small_jobs(instance.jobs):
        raise PreconditionError("weights do not favor small jobs; optimality guarantee does not apply")

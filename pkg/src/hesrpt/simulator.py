"""Continuous-allocation discrete-event simulator.

Allocations only change at arrivals and departures, so between events every
job is served at a constant rate and the next departure is solved exactly.
Simultaneous events are handled at one decision point: departures first,
then arrivals, then a single call to the policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AllocationVector, Job, SpeedupParams, WeightScheme
from .errors import DomainError, LivelockError, PreconditionError, SimulationError
from .policies import Policy, PolicyState

SNAP_TOL = 1e-12


@dataclass(frozen=True)
class TraceRow:
    time: float
    event: str  # "arrival" or "departure"
    job_id: int
    allocation: AllocationVector | None  # None once the system is empty


@dataclass(frozen=True, eq=False)
class SimResult:
    """Per-job outcomes (arrays in arrival order) and aggregate metrics.

    Aggregates cover the ``measured`` jobs only; offline every job is measured.
    """

    ids: np.ndarray
    sizes: np.ndarray
    arrivals: np.ndarray
    completions: np.ndarray
    weights: np.ndarray
    measured: np.ndarray
    params: SpeedupParams
    decisions: int
    trace: list[TraceRow] | None = field(default=None, repr=False)

    @property
    def flow_times(self) -> np.ndarray:
        return self.completions - self.arrivals

    @property
    def slowdowns(self) -> np.ndarray:
        return self.flow_times / (self.sizes / self.params.full_rate)

    @property
    def mean_slowdown(self) -> float:
        return float(np.mean(self.slowdowns[self.measured]))

    @property
    def mean_flow_time(self) -> float:
        return float(np.mean(self.flow_times[self.measured]))

    @property
    def weighted_flow_time(self) -> float:
        return math.fsum(self.weights[self.measured] * self.flow_times[self.measured])

    def metric(self, objective: str) -> float:
        return self.mean_flow_time if objective == "flowtime" else self.mean_slowdown

    def completion_of(self, job_id: int) -> float:
        return float(self.completions[np.flatnonzero(self.ids == job_id)[0]])

    def completion_order(self) -> list[int]:
        order = np.lexsort((self.ids, self.completions))
        return [int(self.ids[i]) for i in order]


def next_departure(remaining: np.ndarray, fractions: np.ndarray, params: SpeedupParams):
    """Index of the next job to finish and the time until it does.

    Returns ``(None, inf)`` when no job holds a positive allocation.
    """
    remaining = np.asarray(remaining, dtype=float)
    fractions = np.asarray(fractions, dtype=float)
    live = fractions > 0.0
    if not live.any():
        return None, math.inf
    with np.errstate(divide="ignore", over="ignore"):
        horizon = np.where(live, remaining / params.rate(fractions), np.inf)
    k = int(np.argmin(horizon))
    return k, float(horizon[k])


def simulate(
    jobs: Sequence[Job],
    policy: Policy,
    params: SpeedupParams,
    weights: WeightScheme,
    trace: bool = False,
    warmup: int = 0,
) -> SimResult:
    """Play ``policy`` against ``jobs`` until every job has finished.

    ``warmup`` excludes the first arrivals (by arrival time, then id) from the
    aggregate metrics; they are still simulated.
    """
    jobs = sorted(jobs, key=lambda j: (j.arrival_time, j.id))
    n = len(jobs)
    if n == 0:
        raise DomainError("no jobs to simulate")
    ids = np.array([j.id for j in jobs], dtype=np.int64)
    if len(np.unique(ids)) != n:
        raise DomainError("job ids must be distinct")
    if not (0 <= warmup < n):
        raise DomainError(f"warmup must lie in [0, {n}), got {warmup}")
    sizes = np.array([j.size for j in jobs], dtype=float)
    arrivals = np.array([j.arrival_time for j in jobs], dtype=float)
    w = np.array([weights.weight_of(j, params) for j in jobs], dtype=float)
    completions = np.full(n, np.nan)
    objective = "flowtime" if weights.kind == "flowtime" else "slowdown"

    # active set, as indices into the arrival-ordered arrays
    act = np.zeros(0, dtype=np.int64)
    rem = np.zeros(0)
    frac = np.zeros(0)
    rows: list[TraceRow] | None = [] if trace else None
    t = 0.0
    nxt = 0
    decisions = 0

    while nxt < n or act.size:
        events: list[tuple[str, int]] = []
        if act.size == 0:
            t = max(t, arrivals[nxt])
        else:
            k, dt = next_departure(rem, frac, params)
            t_arr = arrivals[nxt] if nxt < n else math.inf
            if k is None and t_arr == math.inf:
                stuck = [int(ids[i]) for i in act]
                raise LivelockError(f"at t={t!r} jobs {stuck} hold no servers and no arrivals remain")
            if t + dt <= t_arr:
                rem = rem - dt * params.rate(frac)
                rem[k] = 0.0
                t = t + dt
            else:
                rem = rem - (t_arr - t) * params.rate(frac)
                t = t_arr
            done = rem <= SNAP_TOL * sizes[act]
            if done.any():
                for i in act[done]:
                    completions[i] = t
                    events.append(("departure", int(ids[i])))
                keep = ~done
                act, rem = act[keep], rem[keep]
        start = nxt
        while nxt < n and arrivals[nxt] <= t:
            nxt += 1
        if nxt > start:
            new = np.arange(start, nxt)
            act = np.concatenate([act, new])
            rem = np.concatenate([rem, sizes[new]])
            events.extend(("arrival", int(ids[i])) for i in new)
        if act.size == 0:
            if rows is not None:
                rows.extend(TraceRow(t, kind, job_id, None) for kind, job_id in events)
            continue
        state = PolicyState(
            ids=ids[act], sizes=sizes[act], remaining=rem, arrivals=arrivals[act],
            weights=w[act], params=params, objective=objective,
        )
        alloc = policy.decide(state)
        decisions += 1
        if not np.array_equal(alloc.ids, state.ids):
            raise SimulationError(f"{policy!r} at t={t!r}: allocation ids do not match the active jobs")
        bad = alloc.problems()
        if bad:
            raise SimulationError(f"{policy!r} at t={t!r}: invalid allocation ({'; '.join(bad)})")
        frac = alloc.fractions
        if rows is not None:
            rows.extend(TraceRow(t, kind, job_id, alloc) for kind, job_id in events)

    measured = np.ones(n, dtype=bool)
    measured[:warmup] = False
    return SimResult(ids, sizes, arrivals, completions, w, measured, params, decisions, rows)


def work_done(phases, params: SpeedupParams, speed: float = 1.0) -> np.ndarray:
    """Total work per job over ``phases`` of ``(duration, fractions)`` in a system running at ``speed``."""
    total = None
    for duration, fractions in phases:
        done = speed * duration * params.rate(fractions)
        total = done if total is None else total + done
    return total


def speed_scale_equivalence_check(phases, params: SpeedupParams, beta: float, tol: float = 1e-10) -> bool:
    """Check that leaving ``beta`` of the system idle equals a ``(1-beta)**p`` slower full system.

    ``phases`` is a sequence of ``(duration, fractions)`` whose fractions each
    sum to ``1 - beta``. The rescaled schedule ``fractions/(1-beta)`` run at
    speed ``(1-beta)**p`` must do the same work on every job.
    """
    if not (0.0 <= beta < 1.0):
        raise DomainError(f"beta must lie in [0, 1), got {beta}")
    phases = [(float(d), np.asarray(f, dtype=float)) for d, f in phases]
    for _, f in phases:
        if abs(f.sum() - (1.0 - beta)) > 1e-12:
            raise PreconditionError(f"schedule uses {f.sum()!r} of the system, expected {1.0 - beta!r}")
    original = work_done(phases, params)
    rescaled = work_done([(d, f / (1.0 - beta)) for d, f in phases], params, speed=(1.0 - beta) ** params.p)
    scale = np.maximum(np.abs(original), np.finfo(float).tiny)
    return bool(np.all(np.abs(rescaled - original) <= tol * scale))

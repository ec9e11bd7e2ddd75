"""Closed-form optimal allocations (heSRPT) for an offline batch.

Jobs are indexed largest first. With ``z(k)`` the prefix sum of weights in
that order and ``a = 1/(1-p)``, the optimal policy gives rank ``i`` of ``m``
remaining jobs the fraction ``(z(i)/z(m))**a - (z(i-1)/z(m))**a``.

Differences of powers are evaluated through ``expm1``/``log1p`` so that a
tiny weight next to a large prefix sum does not cancel catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import AllocationVector, Instance, ratio_power, require_favors_small
from .errors import DomainError, PreconditionError


def _own_share(weights: np.ndarray, z: np.ndarray, exponent: float) -> np.ndarray:
    """``1 - (z(i-1)/z(i))**a``: each rank's share of itself plus all larger jobs."""
    with np.errstate(divide="ignore"):
        return -np.expm1(exponent * np.log1p(-weights / z))


def ranked_allocation(weights: np.ndarray, p: float) -> np.ndarray:
    """Optimal fractions for jobs already sorted largest first.

    ``weights[i]`` is the weight of rank ``i+1``; the last entry is the
    smallest job and receives the largest share.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        raise DomainError("active set is empty")
    if weights.size == 1:
        return np.ones(1)
    a = 1.0 / (1.0 - p)
    z = np.cumsum(weights)
    return ratio_power(z / z[-1], a) * _own_share(weights, z, a)


@dataclass(frozen=True)
class ScaleFreeConstants:
    """Per-job ratio of the allocation held by larger jobs to the job's own allocation."""

    ids: tuple[int, ...]
    omegas: tuple[float, ...]

    def __post_init__(self):
        if self.omegas and self.omegas[0] != 0.0:
            raise DomainError("the largest job's scale-free constant must be 0")
        if any(not (w >= 0.0 and math.isfinite(w)) for w in self.omegas[1:]):
            raise DomainError("scale-free constants must be finite and nonnegative")

    @property
    def shares(self) -> tuple[float, ...]:
        """``c_i = 1/(1 + omega_i)``."""
        return tuple(1.0 / (1.0 + w) for w in self.omegas)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.ids, self.omegas))


@dataclass(frozen=True)
class Phase:
    start: float
    end: float
    allocation: AllocationVector

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class OfflineSchedule:
    phases: tuple[Phase, ...]
    completions: Mapping[int, float]
    objective: float

    @property
    def completion_order(self) -> list[int]:
        return sorted(self.completions, key=lambda i: (self.completions[i], -i))

    @property
    def makespan(self) -> float:
        return max(self.completions.values())


def optimal_omegas(instance: Instance) -> ScaleFreeConstants:
    require_favors_small(instance)
    w = instance.weight_array
    a = instance.speedup.exponent
    z = np.cumsum(w)
    omegas = [0.0]
    for k in range(1, len(w)):
        omegas.append(1.0 / math.expm1(a * math.log1p(w[k] / z[k - 1])))
    return ScaleFreeConstants(tuple(int(i) for i in instance.ids), tuple(omegas))


def optimal_allocation(instance: Instance, active: Iterable[int] | None = None) -> AllocationVector:
    """Optimal fractions over every job of ``instance``; inactive jobs get 0.

    ``active`` is a collection of job ids (default: all jobs). Offline these
    are the ``m`` largest jobs; ranks among them follow the canonical order.
    """
    ids = instance.ids
    mask = np.ones(len(ids), dtype=bool) if active is None else np.isin(ids, list(active))
    if not mask.any():
        raise DomainError("active set is empty")
    fractions = np.zeros(len(ids))
    fractions[mask] = ranked_allocation(instance.weight_array[mask], instance.speedup.p)
    return AllocationVector(ids, fractions)


def optimal_flow_time(instance: Instance) -> float:
    """Weighted flow time of the optimal schedule for an offline batch."""
    if not instance.is_offline:
        raise PreconditionError("closed-form flow time applies only when every job arrives at time 0")
    require_favors_small(instance)
    p = instance.speedup.p
    w = instance.weight_array
    z = np.cumsum(w)
    # [z(k)^a - z(k-1)^a]^(1-p) == z(k) * (1 - (z(k-1)/z(k))^a)^(1-p)
    terms = instance.sizes * z * np.power(_own_share(w, z, 1.0 / (1.0 - p)), 1.0 - p)
    return math.fsum(terms) / instance.speedup.full_rate


def offline_schedule(instance: Instance) -> OfflineSchedule:
    """Piecewise-constant optimal schedule, built departure by departure.

    Ranks are frozen to the initial canonical order: the smallest active
    job always finishes next.
    """
    if not instance.is_offline:
        raise PreconditionError("offline schedule requires every job to arrive at time 0")
    require_favors_small(instance)
    params = instance.speedup
    ids = instance.ids
    w = instance.weight_array
    remaining = instance.sizes.copy()
    guard = 1e-15 * remaining.sum() / params.full_rate
    t = 0.0
    start = 0.0
    phases = []
    completions = {}
    for m in range(len(ids), 0, -1):
        theta = ranked_allocation(w[:m], params.p)
        rates = params.rate(theta)
        duration = float(remaining[m - 1] / rates[m - 1])
        remaining[: m - 1] -= duration * rates[: m - 1]
        remaining[m - 1] = 0.0
        t += duration
        completions[int(ids[m - 1])] = t
        # a vanishing phase (duplicate sizes) is merged into its successor
        if duration >= guard or m == 1:
            fractions = np.zeros(len(ids))
            fractions[:m] = theta
            phases.append(Phase(start, t, AllocationVector(ids, fractions)))
            start = t
    objective = math.fsum(w[i] * completions[int(ids[i])] for i in range(len(ids)))
    return OfflineSchedule(tuple(phases), completions, objective)

"""Allocation policies behind a single ``decide(state) -> AllocationVector`` interface.

All ties are broken by the lowest job id. HELL and KNEE work on ``G``
discrete quanta of ``N/G`` servers each; the others allocate continuously.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import FLOWTIME, SLOWDOWN, AllocationVector, SpeedupParams
from .errors import ConfigError, DomainError
from .optimal import ranked_allocation

POLICY_NAMES = ("hesrpt", "srpt", "equi", "hell", "knee", "rs")
DEFAULT_QUANTA = 1000
RANK_KEYS = ("remaining", "size", "weighted")


@dataclass(frozen=True, eq=False)
class PolicyState:
    """Snapshot of the active jobs at a decision point (arrays share one order)."""

    ids: np.ndarray
    sizes: np.ndarray
    remaining: np.ndarray
    arrivals: np.ndarray
    weights: np.ndarray
    params: SpeedupParams
    objective: str = SLOWDOWN

    def __post_init__(self):
        if len(self.ids) and np.any(self.remaining <= 0.0):
            raise DomainError("policy state lists a job with no remaining work")

    def __len__(self):
        return len(self.ids)

    @classmethod
    def from_jobs(cls, jobs, params: SpeedupParams, objective: str = SLOWDOWN, weights=None):
        """Convenience constructor from ``Job`` objects (remaining defaults to size)."""
        jobs = list(jobs)
        sizes = np.array([j.size for j in jobs], dtype=float)
        if weights is None:
            weights = params.full_rate / sizes if objective == SLOWDOWN else np.ones(len(jobs))
        return cls(
            ids=np.array([j.id for j in jobs], dtype=np.int64),
            sizes=sizes,
            remaining=np.array([j.remaining for j in jobs], dtype=float),
            arrivals=np.array([j.arrival_time for j in jobs], dtype=float),
            weights=np.asarray(weights, dtype=float),
            params=params,
            objective=objective,
        )


def _require_jobs(state: PolicyState) -> int:
    m = len(state.ids)
    if m == 0:
        raise DomainError("no active jobs")
    return m


def _argmin_lowest_id(values: np.ndarray, ids: np.ndarray) -> int:
    return int(np.lexsort((ids, values))[0])


def _winner_takes_all(state: PolicyState, key: np.ndarray) -> AllocationVector:
    fr = np.zeros(len(state.ids))
    fr[_argmin_lowest_id(key, state.ids)] = 1.0
    return AllocationVector(state.ids, fr)


class Policy:
    name = "policy"

    def decide(self, state: PolicyState) -> AllocationVector:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class SRPT(Policy):
    """Whole system to the job with the least remaining work."""

    name = "srpt"

    def decide(self, state):
        _require_jobs(state)
        return _winner_takes_all(state, state.remaining)


class RS(Policy):
    """Whole system to the job minimising remaining size times initial size."""

    name = "rs"

    def decide(self, state):
        _require_jobs(state)
        return _winner_takes_all(state, state.remaining * state.sizes)


class EQUI(Policy):
    name = "equi"

    def decide(self, state):
        m = _require_jobs(state)
        return AllocationVector(state.ids, np.full(m, 1.0 / m))


class HeSRPT(Policy):
    """Optimal offline allocations, recomputed at every decision point.

    Online this is Adaptive-heSRPT. Active jobs are ranked by descending
    remaining size over weight (``rank_by="weighted"``, the default and the
    RS key under slowdown weights), descending remaining size
    (``rank_by="remaining"``) or descending original size (``rank_by="size"``).
    Ties go to the lower id as the larger rank. For flow time, and for any
    offline batch whose weights favour small jobs, the three rankings agree.
    Weights come from the state: ``s(N)/size`` for slowdown, 1 for flow time.
    """

    name = "hesrpt"

    def __init__(self, rank_by: str = "weighted"):
        if rank_by not in RANK_KEYS:
            raise ConfigError(f"rank_by must be one of {RANK_KEYS}, got {rank_by!r}")
        self.rank_by = rank_by

    def decide(self, state):
        m = _require_jobs(state)
        if m == 1:
            return AllocationVector(state.ids, np.ones(1))
        if self.rank_by == "remaining":
            key = state.remaining
        elif self.rank_by == "size":
            key = state.sizes
        else:
            key = state.remaining / state.weights
        order = np.lexsort((state.ids, -key))
        fr = np.empty(m)
        fr[order] = ranked_allocation(state.weights[order], state.params.p)
        return AllocationVector(state.ids, fr)

    def __repr__(self):
        return f"HeSRPT(rank_by={self.rank_by!r})"


class HELL(Policy):
    """Greedy quanta allocation by efficiency over remaining processing time.

    Granting ``g`` quanta (``a = g*N/G`` servers) to a job with remaining work
    ``r`` scores ``(s(a)/a) / (r/s(a)) = a**(2p-1) / r``. Each round grants the
    (job, extra quanta) pair with the highest score, smallest grant first on
    equal scores, until all quanta are out.
    """

    name = "hell"

    def __init__(self, quanta: int = DEFAULT_QUANTA):
        if int(quanta) < 1:
            raise ConfigError(f"quanta G must be >= 1, got {quanta}")
        self.quanta = int(quanta)

    def decide(self, state):
        m = _require_jobs(state)
        G = self.quanta
        p = state.params.p
        q = 2.0 * p - 1.0
        log_unit = math.log(state.params.n_servers / G)
        log_r = np.log(state.remaining)
        grants = np.zeros(m, dtype=np.int64)
        if q > 0.0:
            # score rises with the grant: first round hands every quantum to
            # the job with the least remaining work
            grants[_argmin_lowest_id(log_r, state.ids)] = G
        elif q == 0.0:
            # score is 1/r regardless of grant: one quantum per round, always
            # to the same job
            grants[_argmin_lowest_id(log_r, state.ids)] = G
        else:
            # score falls with the grant: one quantum per round to the best
            # marginal score; scores are compared in log space
            heap = [(-(q * log_unit - lr), int(i), k) for k, (lr, i) in enumerate(zip(log_r, state.ids))]
            heapq.heapify(heap)
            for _ in range(G):
                _, job_id, k = heap[0]
                grants[k] += 1
                g = grants[k] + 1
                heapq.heapreplace(heap, (-(q * (log_unit + math.log(g)) - log_r[k]), job_id, k))
        return AllocationVector(state.ids, grants / G)

    def __repr__(self):
        return f"HELL(quanta={self.quanta})"


class KNEE(Policy):
    """Knee allocations with threshold ``alpha`` on the marginal run-time reduction.

    A job's knee is the smallest quantum count ``k`` at which adding one more
    quantum shortens its run time ``r/s(k*N/G)`` by less than ``alpha`` (capped
    at ``G``). Jobs receive their knee, smallest knee first, until quanta run
    out; any leftover goes to the job with the least remaining work.
    """

    name = "knee"

    def __init__(self, alpha: float, quanta: int = DEFAULT_QUANTA):
        if not (float(alpha) > 0.0):
            raise ConfigError(f"KNEE threshold alpha must be positive, got {alpha}")
        if int(quanta) < 1:
            raise ConfigError(f"quanta G must be >= 1, got {quanta}")
        self.alpha = float(alpha)
        self.quanta = int(quanta)
        self._cache_p = None
        self._drops = None

    def _unit_drops(self, p: float) -> np.ndarray:
        # k**-p - (k+1)**-p for k = 1..G-1, strictly decreasing
        if self._cache_p != p:
            k = np.arange(1, self.quanta, dtype=float)
            self._drops = np.power(k, -p) - np.power(k + 1.0, -p)
            self._cache_p = p
        return self._drops

    def knees(self, state: PolicyState) -> np.ndarray:
        p = state.params.p
        drops = self._unit_drops(p)
        unit_rate = (state.params.n_servers / self.quanta) ** p
        # run-time reduction from quantum k to k+1 is r/unit_rate * drops[k-1]
        thresholds = self.alpha * unit_rate / state.remaining
        # first k with drops[k-1] < threshold; drops is decreasing
        first = np.searchsorted(-drops, -thresholds, side="right")
        return np.minimum(first + 1, self.quanta)

    def decide(self, state):
        m = _require_jobs(state)
        knees = self.knees(state)
        grants = np.zeros(m, dtype=np.int64)
        left = self.quanta
        for k in np.lexsort((state.ids, knees)):
            if left == 0:
                break
            give = min(int(knees[k]), left)
            grants[k] = give
            left -= give
        if left:
            grants[_argmin_lowest_id(state.remaining, state.ids)] += left
        return AllocationVector(state.ids, grants / self.quanta)

    def __repr__(self):
        return f"KNEE(alpha={self.alpha!r}, quanta={self.quanta})"


def make_policy(name: str, config: Mapping[str, object] | None = None) -> Policy:
    """Build a policy by name; ``config`` accepts ``knee.alpha``, ``quanta.G``, ``hesrpt.rank_by``."""
    config = dict(config or {})
    quanta = int(config.get("quanta.G", DEFAULT_QUANTA))
    if name == "hesrpt":
        return HeSRPT(str(config.get("hesrpt.rank_by", "weighted")))
    if name == "srpt":
        return SRPT()
    if name == "rs":
        return RS()
    if name == "equi":
        return EQUI()
    if name == "hell":
        return HELL(quanta)
    if name == "knee":
        if "knee.alpha" not in config:
            raise ConfigError("KNEE needs 'knee.alpha' (or tune it with knee_tune_alpha)")
        return KNEE(float(config["knee.alpha"]), quanta)
    raise ConfigError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


def default_knee_grid(mean_size: float, params: SpeedupParams, n: int = 30) -> list[float]:
    """``n`` log-spaced thresholds over [1e-6, 1e2] times the mean full-system run time."""
    scale = mean_size / params.full_rate
    return [float(a) for a in np.logspace(-6.0, 2.0, n) * scale]


def knee_tune_alpha(score, grid) -> tuple[float, list[float]]:
    """Pick the threshold with the lowest ``score(alpha)`` (first one wins ties).

    ``score`` runs the whole experiment for one threshold and returns the
    metric being minimised. Returns the best threshold and all scores.
    """
    grid = list(grid)
    if not grid:
        raise ConfigError("KNEE alpha grid is empty")
    scores = [float(score(a)) for a in grid]
    best = min(range(len(grid)), key=lambda i: (scores[i], i))
    return grid[best], scores


__all__ = [
    "EQUI",
    "FLOWTIME",
    "HELL",
    "HeSRPT",
    "KNEE",
    "POLICY_NAMES",
    "Policy",
    "PolicyState",
    "RS",
    "SLOWDOWN",
    "SRPT",
    "default_knee_grid",
    "knee_tune_alpha",
    "make_policy",
]

"""Brute-force optimum for small offline batches.

For every completion order the search space is one allocation row per phase
(phase ``k`` shares the system among the jobs not yet finished, and the
``k``-th job of the order must be the one that finishes). Each order is
searched on a simplex grid, then refined by pairwise coordinate descent with
golden-section line searches. Nothing here uses the closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Instance
from .errors import DomainError, OracleRefusal

MAX_JOBS = 4
DEFAULT_RESOLUTION = 1.0 / 200
GRID_BUDGET = 4_200_000
FEAS_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OrderedProblem:
    """A completion order and one allocation row per phase.

    ``theta[k]`` is aligned with ``order[k:]``: entry 0 belongs to the job
    that must finish at the end of phase ``k``.
    """

    order: tuple[int, ...]
    theta: tuple[np.ndarray, ...]
    objective: float = math.inf


@dataclass(frozen=True)
class OracleResult:
    best: OrderedProblem
    per_order: dict = field(repr=False)
    resolution: float = DEFAULT_RESOLUTION

    @property
    def order(self):
        return self.best.order

    @property
    def theta(self):
        return self.best.theta

    @property
    def objective(self) -> float:
        return self.best.objective

    def allocation_rows(self) -> list[dict[int, float]]:
        """Best allocations per phase keyed by job id."""
        return [dict(zip(self.order[k:], map(float, row))) for k, row in enumerate(self.theta)]


def _problem_arrays(instance: Instance, order: Sequence[int]):
    by_id = {j.id: j for j in instance.jobs}
    if sorted(order) != sorted(by_id):
        raise DomainError("order must be a permutation of the instance's job ids")
    sizes = np.array([by_id[i].size for i in order], dtype=float)
    weights = np.array([instance.weights.weights[i] for i in order], dtype=float)
    return sizes, weights


def _check_rows(theta, m: int):
    if len(theta) != m:
        raise DomainError(f"need {m} allocation rows, got {len(theta)}")
    rows = []
    for k, row in enumerate(theta):
        row = np.asarray(row, dtype=float)
        if row.shape != (m - k,):
            raise DomainError(f"row {k} must have {m - k} entries, got shape {row.shape}")
        if np.any(row < 0.0) or np.any(row > 1.0) or abs(row.sum() - 1.0) > 1e-9:
            raise DomainError(f"row {k} is not a distribution over the active jobs: {row}")
        rows.append(row)
    return rows


def _flow_time(sizes, weights, rows, p: float, n_servers: float) -> float:
    """Weighted flow time of a phase schedule, ``inf`` if the order is violated."""
    m = len(sizes)
    rem = [float(x) for x in sizes]
    t = 0.0
    total = 0.0
    for k in range(m):
        row = rows[k]
        head = row[0]
        if head <= 0.0:
            return math.inf
        rate0 = (head * n_servers) ** p
        dt = rem[k] / rate0
        for j in range(k + 1, m):
            f = row[j - k]
            if f > 0.0:
                r = rem[j] - dt * (f * n_servers) ** p
                if r < -FEAS_TOL * sizes[j]:
                    return math.inf
                rem[j] = max(r, 0.0)
        t += dt
        total += weights[k] * t
    return total


def evaluate_order(instance: Instance, order: Sequence[int], theta) -> float:
    """Weighted flow time of ``theta`` under completion ``order``; ``inf`` if infeasible."""
    sizes, weights = _problem_arrays(instance, order)
    rows = _check_rows(theta, len(order))
    return _flow_time(sizes, weights, rows, instance.speedup.p, instance.speedup.n_servers)


def simplex_grid(d: int, steps: int) -> np.ndarray:
    """All points of the ``d``-simplex with coordinates in multiples of ``1/steps``."""
    if d == 1:
        return np.ones((1, 1))
    bars = np.array(list(itertools.combinations(range(steps + d - 1), d - 1)), dtype=np.int64)
    edges = np.concatenate(
        [np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), steps + d - 1)], axis=1
    )
    return (np.diff(edges, axis=1) - 1) / steps


def _grid_size(m: int, steps: int) -> int:
    return math.prod(math.comb(steps + d - 1, d - 1) for d in range(2, m + 1))


def _grid_search(sizes, weights, p, n_servers, steps):
    """Best phase schedule on the grid for one order: (objective, rows) or (inf, None)."""
    m = len(sizes)
    suffix_w = np.cumsum(weights[::-1])[::-1]
    states = sizes[None, :].astype(float)
    acc = np.zeros(1)
    history = []  # (parent index, grid index, grid) per phase with d >= 2
    for k in range(m - 1):
        d = m - k
        grid = simplex_grid(d, steps)
        rates = np.power(grid * n_servers, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            dur = states[:, None, 0] / rates[None, :, 0]
            left = states[:, None, 1:] - dur[:, :, None] * rates[None, :, 1:]
        ok = np.isfinite(dur) & np.all(left >= -FEAS_TOL * sizes[None, None, k + 1:], axis=2)
        parent, gidx = np.nonzero(ok)
        if parent.size == 0:
            return math.inf, None
        states = np.maximum(left[parent, gidx], 0.0)
        acc = acc[parent] + suffix_w[k] * dur[parent, gidx]
        history.append((parent, gidx, grid))
    full = n_servers ** p
    acc = acc + weights[-1] * states[:, 0] / full
    # completion times accrue through suffix weights: sum_k W_k * dur_k == sum_i w_i T_i
    best = int(np.argmin(acc))
    rows = []
    idx = best
    for parent, gidx, grid in reversed(history):
        rows.append(grid[gidx[idx]].copy())
        idx = parent[idx]
    rows.reverse()
    rows.append(np.ones(1))
    return float(acc[best]), rows


def _golden_min(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _refine(sizes, weights, p, n_servers, rows, tol=1e-8, max_sweeps=2000):
    """Pairwise coordinate descent on the allocation rows."""
    rows = [np.array(r, dtype=float) for r in rows]
    best = _flow_time(sizes, weights, rows, p, n_servers)
    pairs = [(k, i, j) for k, r in enumerate(rows) for i in range(len(r)) for j in range(i + 1, len(r))]
    if not pairs:
        return best, rows
    step_tol = tol * 1e-3
    for _ in range(max_sweeps):
        before = best
        moved = 0.0
        for k, i, j in pairs:
            row = rows[k]
            ti, tj = row[i], row[j]

            def f(shift):
                row[i], row[j] = ti + shift, tj - shift
                return _flow_time(sizes, weights, rows, p, n_servers)

            shift, val = _golden_min(f, -ti, tj, step_tol)
            if val < best:
                row[i], row[j] = ti + shift, tj - shift
                best = val
                moved = max(moved, abs(shift))
            else:
                row[i], row[j] = ti, tj
        if moved < step_tol or before - best <= 1e-15 * abs(best):
            break
    for r in rows:
        r /= r.sum()
    return _flow_time(sizes, weights, rows, p, n_servers), rows


def brute_force_optimum(
    instance: Instance,
    resolution: float = DEFAULT_RESOLUTION,
    tol: float = 1e-8,
    max_jobs: int = MAX_JOBS,
    grid_budget: int = GRID_BUDGET,
) -> OracleResult:
    """Global minimum of weighted flow time over all completion orders.

    The grid step starts at ``resolution`` and is coarsened for larger
    batches until the per-order grid fits in ``grid_budget`` points.
    """
    m = len(instance)
    if m > max_jobs:
        raise OracleRefusal(f"brute force is limited to {max_jobs} jobs ({m}! orders x simplex grids); got {m}")
    if not (0.0 < resolution <= 1.0):
        raise DomainError(f"resolution must lie in (0, 1], got {resolution}")
    if not instance.is_offline:
        raise DomainError("the oracle handles offline batches only")
    steps = max(1, int(round(1.0 / resolution)))
    while steps > 1 and _grid_size(m, steps) > grid_budget:
        steps -= 1
    p, n = instance.speedup.p, instance.speedup.n_servers
    per_order = {}
    best = None
    for order in itertools.permutations(sorted(j.id for j in instance.jobs)):
        sizes, weights = _problem_arrays(instance, order)
        grid_val, rows = _grid_search(sizes, weights, p, n, steps)
        if rows is None:
            per_order[order] = OrderedProblem(order, (), math.inf)
            continue
        val, rows = _refine(sizes, weights, p, n, rows, tol=tol)
        if not val <= grid_val * (1.0 + 1e-12):
            raise AssertionError(f"refinement worsened order {order}: {grid_val!r} -> {val!r}")
        prob = OrderedProblem(order, tuple(rows), val)
        per_order[order] = prob
        if best is None or val < best.objective:
            best = prob
    return OracleResult(best, per_order, 1.0 / steps)


def is_sjf(instance: Instance, order: Sequence[int]) -> bool:
    """True when jobs finish in non-decreasing size order."""
    size = {j.id: j.size for j in instance.jobs}
    xs = [size[i] for i in order]
    return all(a <= b for a, b in zip(xs, xs[1:]))


def scale_free_ratios(problem: OrderedProblem) -> dict[int, list[float]]:
    """Per job, its allocation over the total held by itself and every job finishing later, per phase."""
    out = {}
    for q, job in enumerate(problem.order):
        ratios = []
        for k in range(q + 1):
            row = problem.theta[k]
            tail = row[q - k:].sum()
            ratios.append(float(row[q - k] / tail) if tail > 0 else math.nan)
        out[job] = ratios
    return out

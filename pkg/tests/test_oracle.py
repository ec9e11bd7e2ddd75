import math

import numpy as np
import pytest

from hesrpt.core import FLOWTIME, SLOWDOWN, Instance, Job, SpeedupParams
from hesrpt.errors import DomainError, OracleRefusal
from hesrpt.optimal import optimal_allocation, optimal_flow_time
from hesrpt.oracle import brute_force_optimum, evaluate_order, is_sjf, scale_free_ratios, simplex_grid


def test_evaluate_single_job(half):
    inst = Instance.from_sizes([4.0], half, FLOWTIME)
    assert evaluate_order(inst, (1,), [np.ones(1)]) == pytest.approx(4.0)


def test_evaluate_two_job_schedule(half):
    inst = Instance.from_sizes([1.0, 1.0], half, FLOWTIME)
    val = evaluate_order(inst, (2, 1), [np.array([0.75, 0.25]), np.ones(1)])
    assert val == pytest.approx(1 + math.sqrt(3), rel=1e-14)


def test_evaluate_wrong_finisher_infeasible(half):
    inst = Instance.from_sizes([2.0, 1.0], half, FLOWTIME)
    # order claims job 1 (size 2) finishes first while it holds too little
    assert evaluate_order(inst, (1, 2), [np.array([0.1, 0.9]), np.ones(1)]) == math.inf


def test_evaluate_rejects_malformed(half):
    inst = Instance.from_sizes([2.0, 1.0], half, FLOWTIME)
    with pytest.raises(DomainError):
        evaluate_order(inst, (1, 2), [np.array([0.5, 0.6]), np.ones(1)])


def test_simplex_grid_counts():
    g = simplex_grid(3, 4)
    assert g.shape == (math.comb(6, 2), 3)
    assert np.allclose(g.sum(axis=1), 1.0)


def test_two_equal_jobs(half):
    inst = Instance.from_sizes([1.0, 1.0], half, FLOWTIME)
    res = brute_force_optimum(inst)
    assert res.objective == pytest.approx(1 + math.sqrt(3), rel=1e-9)
    # both orders tie on equal sizes; whichever finishes first holds 75%
    first, second = res.order
    assert res.allocation_rows()[0] == pytest.approx({first: 0.75, second: 0.25}, abs=1e-6)
    assert is_sjf(inst, res.order)


def test_two_unequal_jobs(half):
    inst = Instance.from_sizes([2.0, 1.0], half, FLOWTIME)
    res = brute_force_optimum(inst)
    assert res.objective == pytest.approx(2 + math.sqrt(3), rel=1e-3)
    assert res.order == (2, 1)


@pytest.mark.parametrize("seed", range(3))
def test_three_jobs_slowdown(seed):
    rng = np.random.default_rng(seed)
    params = SpeedupParams(0.5, 100.0)
    inst = Instance.from_sizes(list(rng.uniform(1, 10, 3)), params, SLOWDOWN)
    res = brute_force_optimum(inst)
    closed = optimal_flow_time(inst)
    assert abs(res.objective - closed) <= 1e-3 * closed
    assert is_sjf(inst, res.order)
    first = res.allocation_rows()[0]
    alloc = optimal_allocation(inst).as_dict()
    assert all(abs(first[i] - alloc[i]) <= 1e-3 for i in alloc)


def test_three_job_example_matches_oracle():
    params = SpeedupParams(0.5, 100.0)
    inst = Instance.from_sizes([5.0, 3.0, 2.0], params, SLOWDOWN)
    res = brute_force_optimum(inst)
    assert res.order == (3, 2, 1)
    assert res.objective == pytest.approx(optimal_flow_time(inst), rel=1e-6)


def test_scale_free_ratios_constant(half):
    inst = Instance.from_sizes([3.0, 2.0, 1.0], half, FLOWTIME)
    res = brute_force_optimum(inst)
    for job, ratios in scale_free_ratios(res.best).items():
        assert max(ratios) - min(ratios) <= 1e-5, (job, ratios)


def test_refuses_large_batches(half):
    inst = Instance.from_sizes([1.0] * 5, half, FLOWTIME)
    with pytest.raises(OracleRefusal):
        brute_force_optimum(inst)


def test_rejects_online(half):
    inst = Instance.create([Job(1, 1.0), Job(2, 1.0, 1.0)], half, FLOWTIME)
    with pytest.raises(DomainError):
        brute_force_optimum(inst)

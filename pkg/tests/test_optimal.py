import math

import numpy as np
import pytest

from hesrpt.core import FLOWTIME, SLOWDOWN, Instance, Job, SpeedupParams, WeightScheme
from hesrpt.errors import PreconditionError
from hesrpt.optimal import (
    offline_schedule,
    optimal_allocation,
    optimal_flow_time,
    optimal_omegas,
    ranked_allocation,
)

SQRT3 = math.sqrt(3.0)


def test_two_equal_jobs_allocation(half):
    inst = Instance.from_sizes([1.0, 1.0], half, FLOWTIME)
    alloc = optimal_allocation(inst)
    # equal sizes: the lower id ranks as larger, so job 2 is served hardest
    assert alloc.as_dict() == {1: 0.25, 2: 0.75}


def test_single_job_gets_everything(half):
    inst = Instance.from_sizes([3.0], half, FLOWTIME)
    assert optimal_allocation(inst).as_dict() == {1: 1.0}
    assert optimal_flow_time(inst) == pytest.approx(3.0)


def test_three_equal_jobs_ninths(half):
    inst = Instance.from_sizes([1.0, 1.0, 1.0], half, FLOWTIME)
    alloc = optimal_allocation(inst)
    assert np.allclose(alloc.fractions * 9, [1, 3, 5], atol=1e-13)


def test_omegas(half):
    inst = Instance.from_sizes([1.0, 1.0, 1.0], half, FLOWTIME)
    om = optimal_omegas(inst)
    assert om.omegas[0] == 0.0
    assert om.omegas[1] == pytest.approx(1 / 3, rel=1e-14)
    assert om.omegas[2] == pytest.approx(0.8, rel=1e-14)


@pytest.mark.parametrize("sizes, expected", [((1.0, 1.0), 1 + SQRT3), ((2.0, 1.0), 2 + SQRT3)])
def test_flow_time_values(half, sizes, expected):
    inst = Instance.from_sizes(sizes, half, FLOWTIME)
    assert optimal_flow_time(inst) == pytest.approx(expected, rel=1e-13)
    assert offline_schedule(inst).objective == pytest.approx(expected, rel=1e-13)


def test_schedule_completions_two_jobs(half):
    sched = offline_schedule(Instance.from_sizes([1.0, 1.0], half, FLOWTIME))
    assert sched.completions[2] == pytest.approx(1 / math.sqrt(0.75), rel=1e-14)
    assert sched.completions[1] == pytest.approx(1 / math.sqrt(0.75) + 1 - 0.5 / math.sqrt(0.75), rel=1e-14)
    assert len(sched.phases) == 2


def test_equal_sizes_finish_by_reverse_rank(half):
    sched = offline_schedule(Instance.from_sizes([1.0, 1.0, 1.0], half, FLOWTIME))
    assert sched.completion_order == [3, 2, 1]


def test_three_job_slowdown_example():
    # sizes 5, 3, 2 on 100 servers with p = 0.5 finish at .23, .44, .82
    # to two places
    params = SpeedupParams(0.5, 100.0)
    sched = offline_schedule(Instance.from_sizes([5.0, 3.0, 2.0], params, SLOWDOWN))
    got = [round(sched.completions[i], 2) for i in (3, 2, 1)]
    assert got == [0.23, 0.44, 0.82]
    assert sched.completion_order == [3, 2, 1]


def test_ranked_allocation_sums_to_one():
    w = np.array([0.1, 2.0, 3.0, 50.0])
    for p in (0.01, 0.3, 0.9, 0.995):
        theta = ranked_allocation(w, p)
        assert abs(theta.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(theta) > 0)


def test_non_favoring_weights_rejected(half):
    inst = Instance.create([Job(1, 2.0), Job(2, 1.0)], half, WeightScheme.custom({1: 5.0, 2: 1.0}))
    with pytest.raises(PreconditionError):
        optimal_flow_time(inst)


def test_online_instance_rejected(half):
    inst = Instance.create([Job(1, 2.0), Job(2, 1.0, 0.5)], half, FLOWTIME)
    with pytest.raises(PreconditionError):
        optimal_flow_time(inst)


def test_duplicate_sizes_merge_vanishing_phases():
    params = SpeedupParams(0.5, 1e6)
    inst = Instance.from_sizes([4.0, 4.0, 1.0], params, SLOWDOWN)
    sched = offline_schedule(inst)
    assert sched.makespan == pytest.approx(max(sched.completions.values()))
    assert all(ph.length > 0 for ph in sched.phases)

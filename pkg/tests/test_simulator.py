import math

import numpy as np
import pytest

from hesrpt.core import FLOWTIME, SLOWDOWN, AllocationVector, Instance, Job, SpeedupParams, WeightScheme
from hesrpt.errors import LivelockError, SimulationError
from hesrpt.optimal import offline_schedule
from hesrpt.policies import EQUI, RS, SRPT, HeSRPT, Policy, make_policy
from hesrpt.simulator import next_departure, simulate, speed_scale_equivalence_check
from hesrpt.workloads import Pareto, TargetLoad, WorkloadSpec, generate


def run(sizes, policy, params, objective=FLOWTIME, **kw):
    jobs = [Job(i + 1, x) for i, x in enumerate(sizes)]
    return simulate(jobs, policy, params, WeightScheme.for_objective(objective, jobs, params), **kw)


@pytest.mark.parametrize("name", ["hesrpt", "srpt", "equi", "rs", "hell"])
def test_single_job_slowdown_one(name):
    params = SpeedupParams(0.7, 50.0)
    res = run([3.0], make_policy(name), params, SLOWDOWN)
    assert res.completions[0] == pytest.approx(3.0 / params.full_rate)
    assert res.mean_slowdown == pytest.approx(1.0)


def test_two_equal_jobs_hesrpt(half):
    res = run([1.0, 1.0], HeSRPT(), half)
    assert res.weighted_flow_time == pytest.approx(1 + math.sqrt(3), rel=1e-14)
    assert res.decisions == 2


def test_two_equal_jobs_equi(half):
    res = run([1.0, 1.0], EQUI(), half)
    assert np.allclose(res.completions, math.sqrt(2), rtol=1e-15)


def test_next_departure_examples():
    k, dt = next_departure([3.0], [1.0], SpeedupParams(0.5, 9.0))
    assert (k, dt) == (0, pytest.approx(1.0))
    k, dt = next_departure([1.0, 1.0], [0.25, 0.75], SpeedupParams(0.5, 1.0))
    assert k == 1 and dt == pytest.approx(1 / math.sqrt(0.75))
    k, _ = next_departure([5.0, 1.0], [0.0, 1.0], SpeedupParams(0.5, 1.0))
    assert k == 1
    assert next_departure([1.0], [0.0], SpeedupParams(0.5, 1.0)) == (None, math.inf)


def test_offline_simulation_matches_schedule():
    params = SpeedupParams(0.4, 1e3)
    sizes = [7.0, 3.5, 2.0, 2.0, 0.3]
    inst = Instance.from_sizes(sizes, params, SLOWDOWN)
    sched = offline_schedule(inst)
    res = run(sizes, HeSRPT(), params, SLOWDOWN)
    for job_id, t in sched.completions.items():
        assert res.completion_of(job_id) == pytest.approx(t, rel=1e-12)


def test_srpt_equals_rs_offline():
    params = SpeedupParams(0.6, 100.0)
    jobs = generate(WorkloadSpec(30, Pareto(1.2), seed=4))
    w = WeightScheme.slowdown(jobs, params)
    a = simulate(jobs, SRPT(), params, w, trace=True)
    b = simulate(jobs, RS(), params, w, trace=True)
    assert np.array_equal(a.completions, b.completions)
    assert all(x.allocation == y.allocation for x, y in zip(a.trace, b.trace))


def test_online_warmup_excluded():
    params = SpeedupParams(0.5, 100.0)
    jobs = generate(WorkloadSpec(50, Pareto(1.5), TargetLoad(0.5), seed=1), params)
    w = WeightScheme.slowdown(jobs, params)
    res = simulate(jobs, HeSRPT(), params, w, warmup=10)
    assert res.measured.sum() == 40
    assert res.mean_slowdown == pytest.approx(np.mean(res.slowdowns[10:]))
    assert np.all(res.flow_times >= res.sizes / params.full_rate * (1 - 1e-12))


class Idle(Policy):
    def decide(self, state):
        return AllocationVector(state.ids, np.zeros(len(state.ids)))


class Greedy(Policy):
    def decide(self, state):
        return AllocationVector(state.ids, np.full(len(state.ids), 0.9))


def test_livelock_detected(half):
    with pytest.raises(LivelockError):
        run([1.0], Idle(), half)


def test_bad_allocation_rejected(half):
    with pytest.raises(SimulationError):
        run([1.0, 2.0], Greedy(), half)


def test_speed_scaling_examples():
    params = SpeedupParams(0.5, 10.0)
    assert speed_scale_equivalence_check([(1.0, [0.6, 0.4])], params, 0.0)
    assert speed_scale_equivalence_check([(2.0, [0.5])], params, 0.5)

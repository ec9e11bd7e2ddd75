import numpy as np
import pytest

from hesrpt.core import FLOWTIME, Instance, Job, SpeedupParams
from hesrpt.errors import ConfigError, InstanceParseError
from hesrpt.workloads import (
    AllAtZero,
    Deterministic,
    Pareto,
    Poisson,
    TargetLoad,
    Uniform,
    WorkloadSpec,
    arrival_rate,
    format_instance,
    generate,
    parse_arrivals,
    parse_dist,
    parse_instance,
    read_instance,
    write_instance,
)


def test_deterministic_batch():
    jobs = generate(WorkloadSpec(3, Deterministic(1.0)))
    assert [(j.id, j.size, j.arrival_time) for j in jobs] == [(1, 1.0, 0.0), (2, 1.0, 0.0), (3, 1.0, 0.0)]


def test_target_load_rate():
    params = SpeedupParams(0.5, 400.0)
    spec = WorkloadSpec(10, Pareto(1.5), TargetLoad(0.5))
    assert arrival_rate(spec, params) == pytest.approx(0.5 * 20.0 / 3.0)


def test_target_load_needs_finite_mean():
    with pytest.raises(ConfigError, match="explicit Poisson"):
        generate(WorkloadSpec(10, Pareto(0.8), TargetLoad(0.5)), SpeedupParams(0.5, 4.0))


def test_same_seed_same_jobs():
    spec = WorkloadSpec(20, Uniform(1, 3), Poisson(2.0), seed=9)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(spec.with_seed(10))


def test_sizes_shared_across_arrival_processes():
    a = generate(WorkloadSpec(20, Pareto(1.5), AllAtZero(), seed=3))
    b = generate(WorkloadSpec(20, Pareto(1.5), Poisson(1.0), seed=3))
    assert [j.size for j in a] == [j.size for j in b]


def test_pareto_mean_sanity():
    draws = Pareto(1.5).sample(np.random.Generator(np.random.PCG64(7)), 1_000_000)
    assert 2.95 <= draws.mean() <= 3.05
    assert draws.min() >= 1.0


def test_poisson_interarrival_mean():
    jobs = generate(WorkloadSpec(1_000_000, Deterministic(1.0), Poisson(4.0), seed=5))
    gaps = np.diff([0.0] + [j.arrival_time for j in jobs])
    assert abs(gaps.mean() - 0.25) <= 0.01 * 0.25


def test_round_trip(tmp_path):
    params = SpeedupParams(0.5, 10.0)
    jobs = generate(WorkloadSpec(15, Pareto(1.1), seed=2))
    path = tmp_path / "inst.csv"
    write_instance(path, jobs)
    assert read_instance(path, params, FLOWTIME) == Instance.create(jobs, params, FLOWTIME)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"job_id,size,arrival_time\n")


@pytest.mark.parametrize(
    "text, line",
    [
        ("job_id,size,arrival_time\n1,0,0\n", 2),
        ("1,2,0\n", 1),
        ("job_id,size,arrival_time\n1,2,0\n1,3,0\n", 3),
        ("job_id,size,arrival_time\n1,abc,0\n", 2),
        ("job_id,size,arrival_time\n1,2\n", 2),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(InstanceParseError) as info:
        parse_instance(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_format_uses_full_precision():
    text = format_instance([Job(1, 0.1 + 0.2)])
    assert "0.30000000000000004" in text


def test_spec_strings():
    assert parse_dist("pareto:1.5") == Pareto(1.5)
    assert parse_dist("pareto:0.8:2") == Pareto(0.8, 2.0)
    assert parse_dist("uniform:1:2") == Uniform(1.0, 2.0)
    assert parse_dist("det:3") == Deterministic(3.0)
    assert parse_arrivals("batch") == AllAtZero()
    assert parse_arrivals("poisson:2") == Poisson(2.0)
    assert parse_arrivals("load:0.8") == TargetLoad(0.8)
    for bad in ("normal:1", "pareto:x"):
        with pytest.raises(ConfigError):
            parse_dist(bad)
    with pytest.raises(ConfigError):
        parse_arrivals("load:1.5")

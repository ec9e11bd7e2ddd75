import csv

import pytest

from hesrpt import cli


def write(tmp_path, text, name="inst.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_allocate_two_equal_jobs(tmp_path, capsys):
    inst = write(tmp_path, "job_id,size,arrival_time\n1,1,0\n2,1,0\n")
    assert cli.main(["allocate", "--instance", inst, "--p", "0.5", "--objective", "flowtime",
                     "--out", str(tmp_path)]) == 0
    got = {int(r["job_id"]): float(r["theta"]) for r in rows(tmp_path / "allocation.csv")}
    assert got == {1: 0.25, 2: 0.75}


def test_allocate_three_equal_jobs(tmp_path):
    inst = write(tmp_path, "job_id,size,arrival_time\n1,1,0\n2,1,0\n3,1,0\n")
    assert cli.main(["allocate", "--instance", inst, "--objective", "flowtime", "--out", str(tmp_path)]) == 0
    got = [float(r["theta"]) * 9 for r in rows(tmp_path / "allocation.csv")]
    assert got == pytest.approx([1, 3, 5], abs=1e-12)


def test_allocate_single_job(tmp_path):
    inst = write(tmp_path, "job_id,size,arrival_time\n7,2.5,0\n")
    assert cli.main(["allocate", "--instance", inst, "--out", str(tmp_path)]) == 0
    assert float(rows(tmp_path / "allocation.csv")[0]["theta"]) == 1.0


def test_simulate_writes_result_and_trace(tmp_path):
    inst = write(tmp_path, "job_id,size,arrival_time\n1,1,0\n2,1,0\n")
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--instance", inst, "--servers", "1", "--policy", "equi",
                     "--trace", "--out", str(out)]) == 0
    result = rows(out / "result.csv")
    assert list(result[0]) == ["job_id", "arrival", "completion", "flow_time", "slowdown"]
    assert float(result[0]["completion"]) == pytest.approx(2**0.5)
    trace = rows(out / "trace.csv")
    assert [r["event"] for r in trace] == ["arrival", "arrival", "departure", "departure"]


def test_unknown_policy_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate", "--policy", "fifo"])
    assert info.value.code == 2


def test_bad_config_is_usage_error(tmp_path):
    assert cli.main(["compare-offline", "--p", "0.5", "--policy", "fifo", "--out", str(tmp_path)]) == 2
    assert cli.main(["gen", "--dist", "normal:1"]) == 2


def test_parse_error_exit_code(tmp_path):
    inst = write(tmp_path, "job_id,size,arrival_time\n1,0,0\n")
    assert cli.main(["allocate", "--instance", inst]) == 3
    assert cli.main(["allocate", "--instance", str(tmp_path / "missing.csv")]) == 3


def test_oracle_refuses_five_jobs():
    assert cli.main(["oracle", "--jobs", "5", "--count", "1"]) == 4


def test_online_instance_refused_by_allocate(tmp_path):
    inst = write(tmp_path, "job_id,size,arrival_time\n1,1,0\n2,1,1\n")
    assert cli.main(["allocate", "--instance", inst]) == 4


def test_oracle_csv_columns(tmp_path):
    assert cli.main(["oracle", "--jobs", "2", "--count", "1", "--p", "0.5", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "oracle.csv")
    assert list(table[0]) == list(cli.ORACLE_HEADER)
    assert abs(float(table[0]["rel_gap"])) < 1e-6
    assert table[0]["order_is_sjf"] == "1"


def test_compare_offline_outputs(tmp_path):
    assert cli.main(["compare-offline", "--jobs", "10", "--reps", "2", "--p", "0.5",
                     "--knee-grid", "1e-3", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "results.csv")
    assert {r["policy"] for r in table} == {"hesrpt", "srpt", "equi", "hell", "knee"}
    svg = (tmp_path / "offline_p0.5.svg").read_text(encoding="utf-8")
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    assert "href=\"http" not in svg


def test_online_infinite_mean_refused(tmp_path):
    assert cli.main(["compare-online", "--dist", "pareto:0.8", "--jobs", "10", "--reps", "1",
                     "--p", "0.5", "--out", str(tmp_path)]) == 2


def test_knee_grid_parse():
    assert cli.parse_knee_grid("1e-6:1e2:30") == (1e-6, 1e2, 30)
    assert cli.parse_knee_grid("0.5") == (0.5, 0.5, 1)

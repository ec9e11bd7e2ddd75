"""Shared fixtures and the per-criterion PASS/FAIL summary."""

from __future__ import annotations

import pytest

from hesrpt.core import SpeedupParams

CRITERIA = {
    1: "closed-form identity (200 instances, rel 1e-9, < 10 s)",
    2: "oracle optimality (M=2,3; 0.1%, SJF, alloc 1e-3)",
    3: "two equal jobs split exactly (0.25, 0.75)",
    4: "trace invariants over >= 1000 offline traces",
    5: "speed-scaling equivalence (100 schedules, 1e-10)",
    6: "non-SJF counterexample with scale-free per-order optimum",
    7: "offline desk comparison ratios",
    8: "online desk comparison",
    9: "CLI byte-identical reruns",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for mark in report.user_properties:
        if mark[0] == "criterion":
            _outcomes.setdefault(mark[1], []).append(report.passed)


@pytest.fixture
def criterion(record_property):
    """Tag a test with the acceptance criterion it checks."""

    def tag(number: int):
        record_property("criterion", number)

    return tag


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        runs = _outcomes.get(number)
        if runs is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


@pytest.fixture
def half():
    """p=0.5 on a single server, the setting of most hand-worked examples."""
    return SpeedupParams(0.5, 1.0)

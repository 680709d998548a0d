from __future__ import annotations

import pytest

from twohop.experiments import draw_instance, trial_rng

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def random_instances(n, seed, lam=1.0, T=1.0):
    return [draw_instance(trial_rng(seed, 0, k), lam, T) for k in range(n)]

import numpy as np
import pytest

from ipdmoran import builtin_roster
from ipdmoran.strategies import Scripted, StrategySpec


@pytest.fixture(scope="session")
def roster():
    return builtin_roster()


@pytest.fixture(scope="session")
def by_name(roster):
    return {s.name: s for s in roster}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def scripted(name, *params, label=None):
    return StrategySpec(label or name, Scripted(name, tuple(params)))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def emit(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

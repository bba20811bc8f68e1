import numpy as np
import pytest

from fracgauge.domain import Grid


@pytest.fixture
def disk32():
    return Grid("disk", 1.0, 32)


@pytest.fixture
def disk64():
    return Grid("disk", 1.0, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion."""

    def log(number: int, name: str, passed: bool, detail: str = "") -> None:
        line = f"[{number:>2}] {name}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE_LINES[number] = line
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[number])

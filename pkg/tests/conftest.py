import numpy as np
import pytest

from zfid import path_graph, penta_sun

ACCEPTANCE_LINES = []


@pytest.fixture
def p3():
    return np.array([[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]])


@pytest.fixture
def h5():
    return penta_sun()


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def _record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from saulyev_ac.potentials import Potential


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["poly", "log"])
def potential(request):
    return Potential.parse(request.param)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

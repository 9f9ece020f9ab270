import sys

import pytest

from cktcs.core import make_params
from cktcs.verify import battery


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])


@pytest.fixture(scope="session")
def battery_params():
    return battery()


@pytest.fixture
def undamped():
    return make_params(1.0, 0.0, 1.0, 1.0, 1j, 1.0, 0.5)


@pytest.fixture
def damped():
    return make_params(1.0, 0.4, 1.0, 1.0, 0.9j, 1.0, 0.5)


@pytest.fixture
def overdamped():
    return make_params(1.0, 4.0, 1.0, 1.0, 1.5j, 1.0, 0.5)


@pytest.fixture
def critical():
    return make_params(1.0, 2.0, 1.0, 1.0, 1j, 1.0, 0.5)

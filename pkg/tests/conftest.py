import pytest

from qualqa import resources
from qualqa.theory import read_theory


@pytest.fixture(scope="session")
def friction():
    return read_theory(resources.path("friction.theory"))


@pytest.fixture(scope="session")
def full_theory():
    return read_theory(resources.path("quarel.theory"))


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])

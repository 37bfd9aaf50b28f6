import pytest

from twowaysim.protocols import load_protocol

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def pip_spec():
    return load_protocol("pairing")


@pytest.fixture(scope="session")
def epidemic_spec():
    return load_protocol("epidemic")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

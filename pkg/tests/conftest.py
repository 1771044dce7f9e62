import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tcpnet import load_fixture, parse_constraints  # noqa: E402
from tcpnet import fixture_text  # noqa: E402


@pytest.fixture
def evening():
    return load_fixture("evening.tcp")


@pytest.fixture
def flight():
    return load_fixture("flight.tcp")


@pytest.fixture
def ab():
    return load_fixture("ab.tcp")


@pytest.fixture
def suits(evening):
    return parse_constraints(fixture_text("suits.con"), evening)


@pytest.fixture
def no_a1b1(ab):
    return parse_constraints(fixture_text("no_a1b1.con"), ab)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

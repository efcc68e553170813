import functools

import pytest

from confdim.endomorphism import iterate
from confdim.fixtures import load, shipped

FIXTURES = shipped()


@functools.lru_cache(maxsize=None)
def fixture(name):
    return load(name)


@functools.lru_cache(maxsize=None)
def tower(name, n):
    return iterate(fixture(name).ve, n)


@pytest.fixture(params=FIXTURES)
def fixture_name(request):
    return request.param


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

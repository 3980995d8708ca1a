import numpy as np
import pytest
from hypothesis import strategies as st

from nlcollapse.boxes import named_box, random_box

seeds = st.integers(min_value=0, max_value=2**32 - 1)
ns_boxes = seeds.map(lambda s: random_box(np.random.default_rng(s)))


@pytest.fixture(scope="session")
def PR():
    return named_box("PR")


@pytest.fixture(scope="session")
def PRp():
    return named_box("PRprime")


@pytest.fixture(scope="session")
def I():
    return named_box("I")


@pytest.fixture(scope="session")
def SR():
    return named_box("SR")


@pytest.fixture(scope="session")
def P0():
    return named_box("P0")


@pytest.fixture(scope="session")
def P1():
    return named_box("P1")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    lines = test_acceptance.pytest_terminal_summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

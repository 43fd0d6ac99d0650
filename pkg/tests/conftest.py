import pytest

from cdpta import fixtures

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fig1():
    return fixtures.load("fig1")


@pytest.fixture(scope="session")
def notinit():
    return fixtures.load("notinit")


@pytest.fixture(scope="session")
def fig1_imdp(fig1):
    from cdpta.imdp import build_imdp

    return build_imdp(fig1)


@pytest.fixture(scope="session")
def fig1_imc(fig1_imdp):
    from cdpta.imc import reduce_to_imc

    return reduce_to_imc(fig1_imdp)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

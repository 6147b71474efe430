import pytest
from hypothesis import HealthCheck, settings
from mpmath import mp

from qperiods.laurent import LaurentPolynomial

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _reset_mp():
    prec = mp.prec
    yield
    mp.prec = prec


def poly(m, terms):
    return LaurentPolynomial(m, {tuple(e): c for e, c in terms.items()})


@pytest.fixture
def p1():
    return poly(1, {(1,): 1, (-1,): 1})


@pytest.fixture
def p2():
    return poly(2, {(1, 0): 1, (0, 1): 1, (-1, -1): 1})


@pytest.fixture
def p1xp1():
    return poly(2, {(1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1})


@pytest.fixture
def p3():
    return poly(3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1, (-1, -1, -1): 1})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

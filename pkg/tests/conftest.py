import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ipwbias import bias_lab, dgp
from ipwbias.randgen import SeedSpec

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def example2():
    return dgp.preset("example2")


@pytest.fixture(scope="session")
def example2_quad(example2):
    spec, mis = example2
    return bias_lab.pseudo_true_quadrature(spec, mis)


@pytest.fixture(scope="session")
def example2_mc(example2):
    spec, mis = example2
    return bias_lab.pseudo_true(spec, mis, 10**6, SeedSpec(1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run
CRITERIA = {}


def record_criterion(number, passed, detail=""):
    CRITERIA[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from corrdesign import CovarianceKernel, Design, RegressionBasis

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_RESULTS = {}


@pytest.fixture(autouse=True)
def _quiet_solver(caplog):
    caplog.set_level(logging.ERROR, logger="corrdesign")


@pytest.fixture
def quad_basis():
    return RegressionBasis.monomial(3)


@pytest.fixture
def three_point():
    return Design([-1.0, 0.0, 1.0])


@pytest.fixture
def tri1():
    return CovarianceKernel.triangular(1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

import pytest
from hypothesis import HealthCheck, settings

from slmiv import models

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# 2 N(-1): defect of CEV(beta=1, sigma=1, s0=1, T=1), from the mpmath oracle
M_CEV1 = 0.31731050786291410283
N_CEV1 = -0.47523284924708358


@pytest.fixture(scope="session")
def cev1():
    return models.cev_terminal_law(s0=1.0, beta=1.0, sigma=1.0, T=1.0)


@pytest.fixture(scope="session")
def fig1():
    return models.cev_terminal_law(s0=1.0, beta=2.4, sigma=0.1, T=1.0)


@pytest.fixture(scope="session")
def bridge04():
    return models.bridge_terminal_law(mu=0.4, T=1.0)


@pytest.fixture(scope="session")
def lognormal02():
    return models.lognormal_terminal_law(0.2, 1.0)



def pytest_terminal_summary(terminalreporter):
    from test_acceptance import CRITERIA, RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag, _, _ in CRITERIA:
        if tag in RESULTS:
            terminalreporter.write_line(RESULTS[tag])

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ssm_pmh import io
from ssm_pmh.models import LgssParameters, SvParameters

# numba compiles on first call; keep hypothesis from timing that out
settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

LGSS_THETA = LgssParameters(0.75, 1.0, 0.1)
SV_THETA = SvParameters(0.0, 0.9, 0.2)

# (criterion, line) pairs recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def lgss_data():
    return io.load_data(io.bundled_path("lgss_T250.csv"))


@pytest.fixture(scope="session")
def sv_data():
    return io.load_data(io.bundled_path("sv_T500.csv"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

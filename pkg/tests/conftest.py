import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from resonance_tracer.hbm import AftGrid
from resonance_tracer.model import sdof_model, twodof_model

settings.register_profile(
    "default", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def model_m1():
    return twodof_model(force_on=1)


@pytest.fixture(scope="session")
def model_m2():
    return twodof_model(force_on=2)


@pytest.fixture(scope="session")
def duffing():
    return sdof_model(m=1.0, c=0.02, k=1.0, f=1.0, k_nl=1.0)


@pytest.fixture(scope="session")
def grid3():
    return AftGrid(3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracgeo.dsl import parse_spec, sample_spec

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def sample(text, n, L, m):
    return sample_spec(parse_spec(text), n, L, m)


@pytest.fixture
def box1():
    return sample("box_indicator([0],[1],1)", 1, 2.0, 200)


@pytest.fixture
def gauss2():
    return sample("gaussian([0,0],0.5,1)", 2, 3.0, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")

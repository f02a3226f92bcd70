import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mgsn.distribution import MgsnParams

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")

# lines collected by tests/test_acceptance.py, echoed at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@st.composite
def spd_matrices(draw, d, lo=-1.5, hi=1.5, ridge=0.3):
    a = np.array(draw(st.lists(st.floats(lo, hi), min_size=d * d, max_size=d * d))).reshape(d, d)
    return a @ a.T + ridge * np.eye(d)


@st.composite
def mgsn_params(draw, d=None, p_min=0.05, mu_scale=3.0):
    if d is None:
        d = draw(st.integers(1, 4))
    p = draw(st.one_of(st.just(1.0), st.floats(p_min, 1.0)))
    mu = np.array(draw(st.lists(st.floats(-mu_scale, mu_scale), min_size=d, max_size=d)))
    return MgsnParams(p, mu, draw(spd_matrices(d)))


def random_params(rng, d, p=None, mu_scale=2.0):
    a = rng.normal(size=(d, d))
    sigma = a @ a.T / d + 0.5 * np.eye(d)
    p = rng.uniform(0.1, 1.0) if p is None else p
    return MgsnParams(p, rng.normal(size=d) * mu_scale, sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

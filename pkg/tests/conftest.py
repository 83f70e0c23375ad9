import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isindy.benchmarks import NoiseSpec, add_noise, get_system

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def logistic():
    return get_system("logistic")


@pytest.fixture(scope="session")
def logistic_truth(logistic):
    return logistic.simulate().states


@pytest.fixture(scope="session")
def logistic_obs0(logistic_truth):
    return add_noise(logistic_truth, NoiseSpec(0.0))


@pytest.fixture(scope="session")
def lorenz_truth():
    return get_system("lorenz").simulate().states


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

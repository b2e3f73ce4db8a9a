import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def bsc01():
    return [[0.9, 0.1], [0.1, 0.9]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from ekphd_slam.sim import default_scenario


@pytest.fixture
def bs():
    return np.array([0.0, 0.0, 40.0])


@pytest.fixture
def scenario():
    return default_scenario(seed=0)


@pytest.fixture
def sigma():
    return np.diag([1e-2, 1e-4, 1e-4, 1e-4, 1e-4])

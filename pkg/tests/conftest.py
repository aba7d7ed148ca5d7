import numpy as np
import pytest

from nano_nmpc import VehicleParams


@pytest.fixture
def params():
    return VehicleParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

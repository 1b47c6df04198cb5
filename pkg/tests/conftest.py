import numpy as np
import pytest

from pcac.dynamics import VehicleParams
from pcac.linear_model import LinearHoverModel


@pytest.fixture(scope="session")
def vehicle():
    return VehicleParams(m=4.34, J=np.array([0.082, 0.0845, 0.1377]), g=9.81)


@pytest.fixture(scope="session")
def model(vehicle):
    return LinearHoverModel.from_params(vehicle, 0.1)

import numpy as np
import pytest

import vexlab as vx


@pytest.fixture(scope="session")
def interval():
    return vx.Domain.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def interval_mesh(interval):
    return vx.build_mesh(interval, 0.02)


@pytest.fixture(scope="session")
def fine_interval_mesh(interval):
    return vx.build_mesh(interval, 0.005)


@pytest.fixture(scope="session")
def unit_square():
    return vx.Domain.polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


@pytest.fixture(scope="session")
def square_mesh(unit_square):
    return vx.build_mesh(unit_square, 0.15)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)

"""Shared fixtures and hypothesis settings for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nnstokes import TorusGrid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def grid2d():
    return TorusGrid(2, 32)


@pytest.fixture
def grid2d_fine():
    return TorusGrid(2, 64)


@pytest.fixture
def grid3d():
    return TorusGrid(3, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest

from holofield import OpticalConfig


@pytest.fixture
def desk_cfg():
    """Small sensor, full depth range, fine plane grid."""
    return OpticalConfig(nx=256, ny=256, n_planes=1000)


@pytest.fixture
def tiny_cfg():
    """Very small sensor for brute-force comparisons."""
    return OpticalConfig(nx=64, ny=48, n_planes=20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from hdft import config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    """Run kernel-sensitive tests on both lanes."""
    saved = config.backend()
    config.set_backend(request.param)
    yield request.param
    config.set_backend(saved)

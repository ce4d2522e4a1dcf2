import warnings

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("rbfquad", max_examples=40, deadline=None)
settings.load_profile("rbfquad")


@pytest.fixture
def quiet():
    """Silence the below-minimal-degree warning for deliberately unusual spaces."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

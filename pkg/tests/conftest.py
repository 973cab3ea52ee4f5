import numpy as np
import pytest


@pytest.fixture
def rng(request):
    # one reproducible stream per test, keyed by the test name
    return np.random.default_rng([20240101, *map(ord, request.node.name[:40])])

import logging

import numpy as np
import pytest

# the 3D/2D ratio warning fires on most generated catalogs; keep test output clean
logging.getLogger("holovr.latency").setLevel(logging.ERROR)
logging.getLogger("holovr.homo").setLevel(logging.ERROR)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

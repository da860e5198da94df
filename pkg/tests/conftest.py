import numpy as np
import pytest

from pubamg import GAMES


@pytest.fixture(scope="session")
def games():
    return {name: make() for name, make in GAMES.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

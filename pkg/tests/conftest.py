import numpy as np
import pytest

from ce_lab.cases import build_heat, build_random_walk, build_spiral, SPIRAL_SCENARIOS


@pytest.fixture
def heat():
    return build_heat()


@pytest.fixture
def random_walk():
    return build_random_walk()


@pytest.fixture
def spiral1():
    return build_spiral(psi=SPIRAL_SCENARIOS[1]["psi"], x0=SPIRAL_SCENARIOS[1]["x0"])


@pytest.fixture
def spiral2():
    return build_spiral(psi=SPIRAL_SCENARIOS[2]["psi"], x0=SPIRAL_SCENARIOS[2]["x0"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from randhelm import DGSpace, PenaltySet, build_uniform_mesh


@pytest.fixture(scope="session")
def mesh4():
    return build_uniform_mesh(4)


@pytest.fixture(scope="session")
def space4(mesh4):
    return DGSpace(mesh4, degree=1)


@pytest.fixture(scope="session")
def penalties():
    return PenaltySet()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

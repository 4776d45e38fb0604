import numpy as np
import pytest

from nhcz import DiscreteSpace, DominatingFunction
from nhcz.scenarios import generate


@pytest.fixture(scope="session")
def line3():
    return generate("line3-canonical", 3, 0)


@pytest.fixture(scope="session")
def grid64():
    return generate("grid", 64, 7)


@pytest.fixture(scope="session")
def cluster32():
    return generate("cluster-spike", 32, 7)


@pytest.fixture(scope="session")
def bergman32():
    return generate("bergman-sample", 32, 7)


def random_space(seed, n=12, dim=2):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 4, size=(n, dim))
    masses = rng.uniform(0.2, 2.0, size=n)
    return DiscreteSpace.from_coords(pts, masses)

import numpy as np
import pytest

from geobary import (
    Euclidean,
    GaussianBures,
    GridWasserstein,
    SpiderTree,
    Sphere,
    Wasserstein1D,
)


@pytest.fixture(scope="session")
def plane():
    return Euclidean(2)


@pytest.fixture(scope="session")
def sphere():
    return Sphere(3)


@pytest.fixture(scope="session")
def spider():
    return SpiderTree(5)


@pytest.fixture(scope="session")
def w1d():
    return Wasserstein1D(4)


@pytest.fixture(scope="session")
def bures2():
    return GaussianBures(2)


@pytest.fixture(scope="session")
def line_grid():
    """Six fixed atoms on the real line: exact transport is closed-form."""
    return GridWasserstein(np.linspace(0.0, 1.0, 6).reshape(-1, 1))


@pytest.fixture(scope="session")
def plane_grid():
    """Five fixed atoms in the plane: exact transport goes through the LP."""
    rng = np.random.default_rng(99)
    return GridWasserstein(rng.uniform(0.0, 1.0, size=(5, 2)))


def sphere_cap_point(space, rng, radius, center=None):
    """Uniform-ish point within geodesic ``radius`` of ``center`` (north pole)."""
    if center is None:
        center = np.zeros(space.d)
        center[-1] = 1.0
    while True:
        v = rng.normal(size=space.d)
        v /= np.linalg.norm(v)
        cos = float(np.dot(v, center))
        sin = float(np.linalg.norm(v - cos * center))
        if np.arctan2(sin, cos) <= radius:
            return space.point(v)

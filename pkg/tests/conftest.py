import pytest

from wrpath import fixtures


@pytest.fixture(scope="session")
def single_mesh():
    return fixtures.single()


@pytest.fixture(scope="session")
def two_region_mesh():
    return fixtures.two_region()


@pytest.fixture(scope="session")
def fan_mesh():
    return fixtures.fan()


@pytest.fixture(scope="session")
def strip_mesh():
    return fixtures.strip(weights=[1.0, 4.0, 2.0, 8.0, 3.0, 5.0])


@pytest.fixture(scope="session")
def rand_mesh():
    return fixtures.random_delaunay(3)

import pytest

from fluctuator import walk


@pytest.fixture(scope="session")
def lazy():
    return walk.lazy_walk()


@pytest.fixture(scope="session")
def skewed():
    return walk.skewed_walk()

import pytest

from wallopt.building import default_reunion_house
from wallopt.weather import synthetic_tropical


@pytest.fixture(scope="session")
def house():
    return default_reunion_house()


@pytest.fixture(scope="session")
def tropical_year():
    return synthetic_tropical(365, seed=1)


@pytest.fixture(scope="session")
def tropical_month():
    return synthetic_tropical(35, seed=1)

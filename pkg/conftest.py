import pytest

import config
from symmetry.determining import point_scope


@pytest.fixture
def scope():
    return point_scope()


@pytest.fixture(autouse=True)
def quiet_progress():
    config.progress['disable'] = True
    yield
    config.progress['disable'] = False

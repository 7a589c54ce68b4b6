import pytest

from ionize.model import make_params
from ionize.volterra import run


@pytest.fixture(scope="session")
def default_params():
    return make_params()


@pytest.fixture(scope="session")
def short_traj(default_params):
    # 10 time units at the default step 0.01
    return run(default_params, t_max=10.0, n_steps=1000)


@pytest.fixture(scope="session")
def default_traj(default_params):
    return run(default_params, t_max=60.0, n_steps=6000)

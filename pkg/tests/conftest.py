# tests/conftest.py
import numpy as np
import pytest

from core.lattice import LatticeSpec, build_nn_patch_graph


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chain6():
    return LatticeSpec((6,), (True,))


@pytest.fixture
def chain6_graph(chain6):
    return build_nn_patch_graph(chain6)


@pytest.fixture
def square3():
    return LatticeSpec((3, 3), (True, True))


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)

import numpy as np
import pytest

import liespec as ls


@pytest.fixture(scope="session")
def su2():
    return ls.su2_entry()


@pytest.fixture(scope="session")
def so3():
    return ls.so3_entry()


@pytest.fixture(scope="session")
def t2():
    return ls.torus_entry(2)


@pytest.fixture(scope="session")
def t3():
    return ls.torus_entry(3)


@pytest.fixture(scope="session")
def su2xsu2():
    return ls.product_entry([ls.su2_entry(), ls.su2_entry()])


@pytest.fixture(scope="session")
def small_net(su2):
    """2000-node net, enough for mechanics tests (not for tight brackets)."""
    return ls.build_net(su2, 2000, 12, seed=0)


@pytest.fixture(scope="session")
def mid_net(su2):
    """4000-node net for monotonicity sweeps at moderate cost."""
    return ls.build_net(su2, 4000, 12, seed=0)


@pytest.fixture(scope="session")
def big_net(su2):
    """The documented default net (20000 nodes, knn 12, seed 0)."""
    return ls.build_net(su2, 20000, 12, seed=0)


def identity_spec(m):
    return ls.metric_from_matrix(np.eye(m))

import pytest

from junctiongen.config import toy_config
from junctiongen.scenegraph import GraphVariant
from junctiongen.synthetic import make_synthetic_points


@pytest.fixture(scope="session")
def toy_cfg():
    return toy_config()


@pytest.fixture(scope="session")
def toy_cluster_cfg():
    return toy_config(variant=GraphVariant.CLUSTER)


@pytest.fixture(scope="session")
def toy_points(toy_cfg):
    return make_synthetic_points(20, toy_cfg, seed=7)

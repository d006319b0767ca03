"""
Shared pytest fixtures for AMOS-VPR tests
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.config import ToyConfig
from core.dataset.toy import gen_toy, gen_traverse
from core.network.model import init_weights
from core.network.spec import LayerSpec, NetworkSpec


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training and end-to-end checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def small_spec(num_classes: int = 3, size: int = 9) -> NetworkSpec:
    """conv -> overlapping pool -> conv -> non-overlapping pool -> fc -> fc -> softmax"""
    layers = (
        LayerSpec.conv("conv1", 4, 3, 1, 1),
        LayerSpec.relu("relu1"),
        LayerSpec.maxpool("pool1", 3, 2),
        LayerSpec.conv("conv2", 6, 3, 1, 1),
        LayerSpec.relu("relu2"),
        LayerSpec.maxpool("pool2", 2, 2),
        LayerSpec.fc("fc3", 5),
        LayerSpec.relu("relu3"),
        LayerSpec.fc("fc4", num_classes),
        LayerSpec.softmax("prob"),
    )
    return NetworkSpec(layers, num_classes, (3, size, size), "small")


@pytest.fixture
def tiny_spec() -> NetworkSpec:
    return small_spec()


@pytest.fixture
def tiny_weights(tiny_spec):
    return init_weights(tiny_spec, seed=3, std=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_config() -> ToyConfig:
    return ToyConfig(num_places=3, images_per_place=4, image_size=32, seed=0)


@pytest.fixture
def toy_dataset(tmp_path, toy_config):
    return gen_toy(toy_config, str(tmp_path / "toy"))


@pytest.fixture
def toy_traverses(tmp_path, toy_config):
    """Reference and query traverses of the same places under different conditions"""
    ref = gen_traverse(toy_config, str(tmp_path / "ref"), condition_seed=1)
    query = gen_traverse(toy_config, str(tmp_path / "query"), condition_seed=2)
    return str(tmp_path / "ref"), str(tmp_path / "query"), ref, query

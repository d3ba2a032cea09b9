"""Shared fixtures: a tiny on-disk dataset and a quickly trained backbone.

The tiny artifacts keep unit tests fast; the acceptance suite builds its own
full-size artifacts (cached under tests/_cache) in test_acceptance.py.
"""

import numpy as np
import pytest

from adapternet.bench import dataset_from_pool, make_splits
from adapternet.data import load_benchmark_pools, pretrain_dataset
from adapternet.models import BackboneConfig
from adapternet.synthetic import write_synthetic_cifar
from adapternet.training import TrainConfig, train_backbone


@pytest.fixture(scope="session")
def tiny_data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinydata")
    write_synthetic_cifar(root, train_n=300, pool_n=200, seed=0)
    return root


@pytest.fixture(scope="session")
def tiny_pools(tiny_data_root):
    return load_benchmark_pools(tiny_data_root)


@pytest.fixture(scope="session")
def tiny_bench(tiny_pools):
    _, pool = tiny_pools
    return dataset_from_pool(pool, make_splits(len(pool)))


TINY_BACKBONE_CFG = BackboneConfig(blocks=((8,), (8,)), hidden_units=32)


@pytest.fixture(scope="session")
def tiny_backbone(tiny_pools):
    """A small-but-real backbone trained for a few seconds."""
    train_pool, _ = tiny_pools
    backbone, _, _ = train_backbone(
        pretrain_dataset(train_pool), config=TINY_BACKBONE_CFG,
        train_cfg=TrainConfig(max_epochs=4, early_stop_patience=4))
    return backbone


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

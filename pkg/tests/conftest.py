import logging
from pathlib import Path

import numpy as np
import pytest

from autooia.data.dataset import split_records, write_manifest, write_split
from autooia.data.records import SceneRecord
from autooia.data.synthetic import CausalRuleTable, SyntheticConfig, generate_synthetic
from autooia.model.config import ModelConfig
from autooia.model.params import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def desk_config():
    return ModelConfig.from_profile("desk", k=2)


@pytest.fixture
def desk_params(desk_config):
    return ModelParams.initialize(desk_config, seed=0)


def random_scene(rng: np.random.Generator, config: ModelConfig, n: int = 4, scene_id: str = "scene") -> SceneRecord:
    return SceneRecord(
        scene_id=scene_id,
        backbone=rng.normal(size=(config.c_backbone, config.spatial + 2, config.spatial + 3)),
        proposals=rng.normal(size=(n, config.c_local, config.spatial, config.spatial)),
        action=rng.integers(0, 2, size=4).astype(np.int8),
        explanation=rng.integers(0, 2, size=21).astype(np.int8),
    )


@pytest.fixture
def scene(rng, desk_config):
    return random_scene(rng, desk_config)


@pytest.fixture
def tiny_synthetic():
    return SyntheticConfig(scenes=20, seed=3, causal_max=2, distractor_max=3)


@pytest.fixture
def tiny_scenes(tiny_synthetic):
    return generate_synthetic(tiny_synthetic)


@pytest.fixture
def dataset_dir(tmp_path: Path, tiny_synthetic, tiny_scenes) -> Path:
    data_dir = tmp_path / "data"
    fractions = (0.7, 0.1, 0.2)
    splits = split_records(tiny_scenes, fractions)
    for split, records in splits.items():
        write_split(data_dir, split, records)
    write_manifest(data_dir, tiny_synthetic, CausalRuleTable.default(),
                   {split: len(records) for split, records in splits.items()}, fractions)
    return data_dir


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger = logging.getLogger("autooia")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
    logger.propagate = True

import numpy as np
import pytest

from wbsdf_kit.checks import scene_path
from wbsdf_kit.scene import load_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def shipped():
    def _load(name):
        sc, _ = load_scene(scene_path(name))
        return sc
    return _load

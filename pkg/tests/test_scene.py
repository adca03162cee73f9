import json

import numpy as np
import pytest

from wbsdf_kit.checks import SHIPPED_SCENES, scene_path
from wbsdf_kit.errors import SceneError
from wbsdf_kit.scene import load_scene, scene_from_dict
from wbsdf_kit.schema import SCENE, problems


@pytest.mark.parametrize("name", SHIPPED_SCENES)
def test_shipped_scene_is_valid(name):
    path = scene_path(name)
    assert problems(json.loads(path.read_text()), SCENE) == []
    scene, render = load_scene(path)
    assert scene.lights and scene.patches and render["spp"] >= 1


def _minimal():
    return {"version": 1,
            "patches": [{"corner": [0, 0, 0], "edge_u": [1, 0, 0], "edge_v": [0, 1, 0]}],
            "lights": [{"type": "point", "position": [0, 0, 1]}],
            "camera": {"position": [0, -2, 1], "look_at": [0, 0, 0]}}


def test_minimal_scene_defaults():
    sc = scene_from_dict(_minimal())
    assert sc.groups == [0] and sc.patches[0].material.type == "diffuse"
    np.testing.assert_allclose(sc.patches[0].rect.normal, [0, 0, 1])


def test_missing_table_is_a_scene_error():
    d = _minimal()
    d["patches"][0]["material"] = {"type": "wbsdf", "table": "nope"}
    with pytest.raises(SceneError, match="missing table"):
        scene_from_dict(d)


def test_bad_wavelength_is_a_scene_error():
    d = _minimal()
    d["wavelengths"] = [550.0]  # nanometres instead of metres
    assert problems(d, SCENE)
    with pytest.raises(SceneError):
        scene_from_dict(d)


def test_schema_reports_pointers():
    d = _minimal()
    d["lights"][0]["position"] = [0, 1]
    d["camera"]["zoom"] = 2
    msgs = problems(d, SCENE)
    assert any(m.startswith("/lights/0/position") for m in msgs)
    assert any(m.startswith("/camera:") for m in msgs)


def test_degenerate_patch_rejected():
    d = _minimal()
    d["patches"][0]["edge_v"] = [2, 0, 0]
    with pytest.raises(SceneError):
        scene_from_dict(d)

import json

import numpy as np
import pytest

from scipy.signal import find_peaks

from wbsdf_kit.checks import _pixel_angles, scene_path
from wbsdf_kit.errors import ArgumentError, SceneError
from wbsdf_kit.render import incoherent_sum, render, spectral_to_rgb, trace_pixel
from wbsdf_kit.microstructure import GridSpec, Microstructure
from wbsdf_kit.scene import scene_from_dict
from wbsdf_kit.wbsdf import WBSDF


def _doc(name):
    return json.loads(scene_path(name).read_text())


def _rect_factor(a, b, c):
    """Point-to-parallel-rectangle form factor, rectangle corner above the point."""
    A, B = a / c, b / c
    sa, sb = np.sqrt(1 + A * A), np.sqrt(1 + B * B)
    return (A / sa * np.arctan(B / sa) + B / sb * np.arctan(A / sb)) / (2 * np.pi)


@pytest.fixture(scope="module")
def floor_closeup():
    d = _doc("diffuse_box")
    d["camera"] = {"position": [0, 0, 0.5], "look_at": [0, 0, 0], "up": [0, 1, 0], "focal_length": 0.05,
                   "aperture_radius": 1e-4, "width": 4, "height": 4, "pixel_pitch": 1e-5}
    return scene_from_dict(d)


def test_diffuse_floor_matches_form_factor(floor_closeup):
    im = render(floor_closeup, spp=4096, seed=3, threads=1)
    v = im.spectral()[0]
    sigma = np.sqrt(im.variance[0].sum()) / v.size
    expected = 0.5 * 1.0 * 4 * _rect_factor(0.5, 0.5, 1.0)  # albedo * radiance * F
    assert abs(v.mean() - expected) < 4 * sigma
    assert sigma < 1e-3 * expected


def test_thread_count_does_not_change_pixels(floor_closeup):
    a = render(floor_closeup, spp=64, seed=7, threads=1).spectral()
    b = render(floor_closeup, spp=64, seed=7, threads=3).spectral()
    assert np.array_equal(a, b)


def test_seed_changes_pixels(floor_closeup):
    a = render(floor_closeup, spp=16, seed=1, threads=1).spectral()
    b = render(floor_closeup, spp=16, seed=2, threads=1).spectral()
    assert not np.array_equal(a, b)


def test_group_renders_sum_to_full_render():
    d = _doc("cd_on_wall")
    d["camera"].update(width=12, height=12, pixel_pitch=d["camera"]["pixel_pitch"] * 64 / 12)
    sc = scene_from_dict(d)
    assert sc.groups == [0, 1]
    full = render(sc, spp=32, seed=5, threads=2)
    parts = [render(sc, spp=32, seed=5, threads=2, groups=[g]) for g in sc.groups]
    assert np.array_equal(incoherent_sum(parts).spectral(), parts[0].spectral() + parts[1].spectral())
    np.testing.assert_allclose(incoherent_sum(parts).spectral(), full.spectral(), rtol=1e-12, atol=1e-300)
    for g in range(2):
        np.testing.assert_array_equal(parts[g].signed[g], full.signed[g])
    with pytest.raises(ArgumentError):
        render(sc, spp=1, groups=[9])


def _small_grating(footprint):
    d = _doc("grating_strip")
    d["camera"].update(width=16, height=16, pixel_pitch=2.5e-3)
    d["tables"]["grating"]["footprint"] = footprint
    return scene_from_dict(d)


def test_signed_rows_agree_with_prefiltered_table():
    """Per-position signed rows and the footprint average estimate the same image mean."""
    ims = {fp: render(_small_grating(fp), spp=256, seed=1, threads=2) for fp in ("patch", 0)}
    means = {fp: im.spectral()[0].mean() for fp, im in ims.items()}
    sig = {fp: np.sqrt(im.variance[0].sum()) / im.variance[0].size for fp, im in ims.items()}
    assert abs(means["patch"] - means[0]) < 4 * np.hypot(sig["patch"], sig[0])
    assert ims[0].stats["negative_samples"] > 0
    assert ims["patch"].stats["negative_samples"] == 0
    assert ims["patch"].stats["nonnegativity"]["ok"]
    st = ims["patch"].stats
    assert 0 < st["paraxial_rejected_energy"] < st["wbsdf_energy"]
    assert st["paraxial_rejected_fraction"] == st["paraxial_rejected_energy"] / st["wbsdf_energy"]


def test_trace_pixel_matches_render_mean(floor_closeup):
    c = trace_pixel(floor_closeup, 1, 2, 256, seed=4)
    im = render(floor_closeup, spp=256, seed=4, threads=1)
    assert c.shape == (1, 256)
    assert c.mean() == pytest.approx(im.spectral()[0, 2, 1], rel=1e-12)
    with pytest.raises(ArgumentError):
        trace_pixel(floor_closeup, 4, 0, 8)


def test_bad_render_arguments(floor_closeup):
    for kw in ({"spp": 0}, {"seed": -1}, {"threads": 0}):
        with pytest.raises(ArgumentError):
            render(floor_closeup, **{"spp": 4, **kw})


def test_pinhole_rejected():
    d = _doc("diffuse_box")
    d["camera"]["aperture_radius"] = 0
    with pytest.raises(SceneError, match="pinhole"):
        scene_from_dict(d)


def test_spectral_to_rgb_channels():
    img = np.stack([np.full((2, 2), v) for v in (1.0, 2.0, 3.0)])
    rgb = spectral_to_rgb(img, (450e-9, 550e-9, 650e-9))
    np.testing.assert_array_equal(rgb[0, 0], [3.0, 2.0, 1.0])


def _patch(c, u, v, material):
    return {"corner": c, "edge_u": u, "edge_v": v, "material": material}


def _white_box(depth):
    white = {"type": "diffuse", "albedo": 1.0}
    walls = [([-.5, -.5, -.5], [1, 0, 0], [0, 1, 0]), ([-.5, -.5, -.5], [0, 1, 0], [0, 0, 1]),
             ([.5, -.5, -.5], [0, 0, 1], [0, 1, 0]), ([-.5, -.5, -.5], [0, 0, 1], [1, 0, 0]),
             ([-.5, .5, -.5], [1, 0, 0], [0, 0, 1])]
    return scene_from_dict({
        "version": 1, "wavelengths": [5.5e-7],
        "patches": [_patch(*w, white) for w in walls],
        "lights": [{"type": "area", "corner": [-.5, -.5, .5], "edge_u": [0, 1, 0], "edge_v": [1, 0, 0],
                    "radiance": 1.0}],
        "camera": {"position": [0, 0, 0], "look_at": [0, 0, -1], "up": [0, 1, 0], "focal_length": 0.01,
                   "aperture_radius": 1e-4, "width": 8, "height": 8, "pixel_pitch": 2e-3},
        "render": {"max_depth": depth}})


def test_closed_white_box_never_gains_energy():
    """Unit-albedo walls around an emitting ceiling: radiance climbs toward the emitted value, never above."""
    means = []
    for depth in (1, 4, 16):
        im = render(_white_box(depth), spp=1024, seed=1, threads=2)
        v = im.spectral()[0]
        sigma = np.sqrt(im.variance[0].sum()) / v.size
        assert v.mean() <= 1.0 + 3 * sigma
        means.append(v.mean())
    assert means[0] < means[1] < means[2] and means[2] > 0.9


def test_empty_scene_is_black():
    d = _doc("diffuse_box")
    d["patches"] = []
    d["camera"].update(width=4, height=4)
    im = render(scene_from_dict(d), spp=8, seed=1, threads=1)
    assert not im.spectral().any()


def test_mirror_scene_has_zero_variance():
    d = _doc("diffuse_box")
    d["patches"][0]["material"] = {"type": "mirror"}
    d["patches"][0].update(corner=[-5, -5, 0], edge_u=[10, 0, 0], edge_v=[0, 10, 0])
    d["lights"][0]["radiance"] = 0.7
    d["camera"] = {"position": [0, 0, 0.5], "look_at": [0, 0, 0], "up": [0, 1, 0], "focal_length": 0.05,
                   "aperture_radius": 1e-4, "width": 8, "height": 8, "pixel_pitch": 1e-3}
    im = render(scene_from_dict(d), spp=64, seed=1, threads=1)
    assert np.allclose(im.spectral(), 0.7, rtol=1e-12)
    assert im.variance.max() < 1e-30  # roundoff of the mean only


def test_incoherent_sum_layout_and_identity(floor_closeup):
    im = render(floor_closeup, spp=8, seed=1, threads=1)
    zero = incoherent_sum([im])
    zero.signed[:] = 0.0
    assert np.array_equal(incoherent_sum([im, zero]).spectral(), im.spectral())
    d = _doc("diffuse_box")
    other = render(scene_from_dict(d), spp=1, seed=1, threads=1)
    with pytest.raises(ArgumentError):
        incoherent_sum([im, other])
    with pytest.raises(ArgumentError):
        incoherent_sum([])


def _visibility(profile):
    mid = len(profile) // 2
    core = profile[mid - 40:mid + 40]
    return (core.max() - core.min()) / (core.max() + core.min())


def test_incoherent_sources_wash_out_fringes():
    d = _doc("double_slit")
    d["camera"].update(height=2)
    shifted = dict(d["lights"][0], corner=[-0.075 + 0.275, -30.0, 100.0], coherence_group=1)
    d["lights"].append(shifted)  # half a fringe period away in angle
    sc = scene_from_dict(d)
    one = render(sc, spp=512, seed=2, threads=2, groups=[0]).spectral()[0].mean(axis=0)
    both = render(sc, spp=512, seed=2, threads=2).spectral()[0].mean(axis=0)
    assert _visibility(both) < 0.5 * _visibility(one)


def test_rainbow_orders_per_wavelength():
    d = _doc("grating_strip")
    d["wavelengths"] = [4.5e-7, 5.5e-7, 6.5e-7]
    d["tables"]["grating"]["microstructure"]["h"] = 1.4e-7
    d["camera"].update(height=4)
    sc = scene_from_dict(d)
    img = render(sc, spp=256, seed=3, threads=2).spectral()
    ang = _pixel_angles(sc.camera, sc.camera.width)
    half = sc.camera.width // 2
    width = np.max(np.abs(np.diff(ang)))
    for b, lam in enumerate(sc.wavelengths):
        prof = img[b].sum(axis=0)
        expected = np.arcsin(lam / 2e-6)
        assert abs(abs(ang[np.argmax(prof[:half])]) - expected) <= width
        assert abs(ang[half + np.argmax(prof[half:])] - expected) <= width


def test_two_cds_combine_orders():
    """The second order only exists after two bounces: the binary grating has no single-bounce second order."""
    lam0, p = 5.5e-7, 2e-6
    d = _doc("two_cds")
    d["patches"][0].update(corner=[-1, -0.3, 0], edge_u=[2, 0, 0], edge_v=[0, 0.38, 0])
    d["patches"][1].update(corner=[-1, 0.08, 0], edge_u=[2, 0, 0], edge_v=[0, 0, 0.5])
    d["lights"][0].update(corner=[-5, -330, 300], edge_u=[0, 90, 0], edge_v=[10, 0, 0])
    d["camera"].update(focal_length=0.01, width=96, height=9, pixel_pitch=2e-4)
    sc = scene_from_dict(d)
    img = render(sc, spp=256, seed=2, threads=2).spectral()
    s = np.sin(_pixel_angles(sc.camera, sc.camera.width))
    for b, lam in enumerate(sc.wavelengths):
        prof = img[b, sc.camera.height // 2]
        pk, _ = find_peaks(prof, height=0.3 * prof.max())
        k = np.abs(s[pk]) / (lam / p)
        step = np.abs(np.diff(s))[pk - 1] / (lam / p)
        assert np.all(np.abs(k - np.round(k)) <= step)
        assert 2 in np.round(k)
    w = WBSDF.from_microstructure(Microstructure.binary_phase_grating(1.4e-7, p), [lam0],
                                  GridSpec(256, 6.25e-8)).prefiltered().table(lam0)
    k0 = int(round(-w.u0 / w.du))
    step = int(round(1 / p / w.du))
    assert w.values[0, k0 + 2 * step] == 0 and w.values[0, k0 + step] > 0

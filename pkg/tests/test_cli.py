import csv
import json

import numpy as np
import pytest

from wbsdf_kit.checks import scene_path
from wbsdf_kit.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_SCENE, main
from wbsdf_kit.errors import ArgumentError


def _scene(tmp_path, name, **camera):
    d = json.loads(scene_path(name).read_text())
    d["camera"].update(camera)
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(d))
    return p


def test_wdf_grating_writes_table_and_report(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["wdf", "--grating", "m=2.0", "p=2e-6", "--n", "512", "--dx", "2e-8", "--out", str(out)]) == EXIT_OK
    assert {"table.csv", "table.wbsdf", "u_marginal.csv", "report.json"} <= {f.name for f in out.iterdir()}
    rep = json.loads((out / "report.json").read_text())
    assert rep["x_marginal_rel_error"] < 1e-9 and rep["u_marginal_rel_error"] < 1e-9
    assert "marginal" in capsys.readouterr().out
    with open(out / "table.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x_meters", "u_cycles_per_meter", "value"]
    assert len(rows) == 1 + rep["rows"] * rep["bins"]
    assert rows[1][0] == rows[rep["bins"]][0] != rows[rep["bins"] + 1][0]  # x outer


def test_wdf_flat_reports_delta(tmp_path, capsys):
    assert main(["wdf", "--flat", "--n", "64", "--dx", "1e-7", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "report.json").read_text())["spectrum"] == "delta at u=0"
    assert "delta at u=0" in capsys.readouterr().out


def test_wdf_slit_first_zero(tmp_path):
    w = 10e-6
    assert main(["wdf", "--slit", str(w), "--n", "512", "--dx", "2e-7", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    du = rep["du"]
    assert abs(rep["first_zero_u"] - 1 / w) <= du
    with open(tmp_path / "u_marginal.csv") as fh:
        rows = list(csv.DictReader(fh))
    u = np.array([float(r["u_cycles_per_meter"]) for r in rows])
    s = np.array([float(r["spectrum"]) for r in rows])
    zero = np.argmin(np.abs(u - 1 / w))
    assert s[zero] < 1e-3 * s.max()


def test_wdf_schema_violation_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "microstructure": {"kind": "slit"}, "grid": {"n": 8, "dx": -1}}))
    assert main(["wdf", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "/grid/dx" in err and "/microstructure" in err


def test_wdf_undersampled_exits_2(tmp_path, capsys):
    assert main(["wdf", "--grating", "m=2.0", "p=2e-6", "--n", "16", "--dx", "5e-7", "--out", str(tmp_path)]) == EXIT_INPUT
    assert "/microstructure" in capsys.readouterr().err


def test_validate_single_check(tmp_path, capsys):
    assert main(["validate", "--only", "wdf-fourier-identity", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[PASS] wdf-fourier-identity" in out and "1/1" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and [c["name"] for c in rep["checks"]] == ["wdf-fourier-identity"]


def test_validate_coarse_grid_fails_with_named_diagnostic(tmp_path, capsys):
    cfg = tmp_path / "coarse.json"
    cfg.write_text(json.dumps({"version": 1, "checks": {"sampling": {
        "tables": [{"kind": "binary_phase_grating", "p": 2e-6, "n": 8, "dx": 5e-7}]}}}))
    code = main(["validate", "--only", "sampling", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == EXIT_FAIL
    out = capsys.readouterr().out
    assert "[FAIL] sampling" in out and "binary_phase_grating p=2e-06 dx=5e-07" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert not rep["passed"] and rep["checks"][0]["detail"]["undersampled"]


def test_validate_unknown_check_exits_2(capsys):
    assert main(["validate", "--only", "no-such-check"]) == EXIT_INPUT
    assert "/checks/no-such-check" in capsys.readouterr().err


def test_render_outputs_and_thread_independence(tmp_path):
    scene = scene_path("diffuse_box")
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"t{threads}"
        assert main(["render", str(scene), "--spp", "16", "--seed", "7", "--threads", threads, "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "image.pfm").read_bytes() == (outs[1] / "image.pfm").read_bytes()
    assert (outs[0] / "bin_550nm.pfm").read_bytes() == (outs[1] / "bin_550nm.pfm").read_bytes()
    assert (outs[0] / "image.ppm").exists()
    stats = json.loads((outs[0] / "stats.json").read_text())
    assert stats["spp"] == 16 and stats["seed"] == 7 and stats["min_pixel_before_clamp"] >= 0
    assert "wall_time_s" in stats and "variance_ratio" not in stats


def test_render_compare_uniform(tmp_path):
    scene = _scene(tmp_path, "grating_strip", width=32, height=32, pixel_pitch=1.25e-3)
    out = tmp_path / "o"
    assert main(["render", str(scene), "--spp", "64", "--compare-uniform", "--out", str(out)]) == EXIT_OK
    stats = json.loads((out / "stats.json").read_text())
    assert stats["variance_ratio"] > 1
    assert 0 <= stats["paraxial_rejected_fraction"] < 1


def test_render_bad_scene_exits_3(tmp_path, capsys):
    d = json.loads(scene_path("diffuse_box").read_text())
    d["patches"][0]["material"] = {"type": "wbsdf", "table": "missing"}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    assert main(["render", str(p), "--out", str(tmp_path / "o")]) == EXIT_SCENE
    d["camera"]["position"] = "here"
    p.write_text(json.dumps(d))
    assert main(["render", str(p), "--out", str(tmp_path / "o")]) == EXIT_SCENE
    assert "/camera/position" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_render_missing_file_exits_2(tmp_path):
    assert main(["render", str(tmp_path / "nope.json")]) == EXIT_INPUT


def test_psf_bundle_and_apply(tmp_path):
    from wbsdf_kit.io import read_psf_bundle, write_pfm, read_pfm
    img = np.zeros((40, 40))
    img[20, 20] = 1.0
    write_pfm(tmp_path / "img.pfm", img)
    write_pfm(tmp_path / "depth.pfm", np.full((40, 40), 1.0))
    out = tmp_path / "psf"
    args = ["psf", "--f-number", "8", "--focus", "2", "--near", "1", "--far", "4", "--planes", "3",
            "--kernel-size", "15", "--apply", str(tmp_path / "img.pfm"), "--depth", str(tmp_path / "depth.pfm"),
            "--out", str(out)]
    assert main(args) == EXIT_OK
    index, kernels = read_psf_bundle(out / "psf_bundle")
    assert len(kernels) == 3 and index["depths_m"][0] == pytest.approx(1.0)
    blurred = read_pfm(out / "blurred.pfm")
    assert blurred.sum() == pytest.approx(1.0, rel=1e-5)
    assert blurred.max() < 0.5


def test_bad_flag_exits_2():
    assert main(["render"]) == EXIT_INPUT
    assert main(["--help"]) == EXIT_OK


def test_outputs_are_idempotent_and_confined(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert main(["wdf", "--binary", "h=1.4e-7", "p=2e-6", "--n", "64", "--dx", "2.5e-7",
                     "--wavelength", "532e-9", "--out", str(out / "wdf")]) == EXIT_OK
        assert main(["psf", "--focal-length", "0.05", "--f-number", "8", "--focus", "2", "--near", "1",
                     "--far", "4", "--planes", "2", "--wavelengths", "550e-9", "--kernel-size", "15",
                     "--out", str(out / "psf")]) == EXIT_OK
        runs.append({p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()})
    assert runs[0] == runs[1]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["run0", "run1"]


def test_thread_default_from_environment(monkeypatch):
    from wbsdf_kit.render import default_threads
    monkeypatch.setenv("WBSDF_KIT_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("WBSDF_KIT_THREADS", "zero")
    with pytest.raises(ArgumentError, match="WBSDF_KIT_THREADS"):
        default_threads()

"""``wbsdf-kit`` command line.

Exit codes: 0 success, 1 a validation or non-negativity check failed,
2 bad input (arguments, config schema, undersampled grids), 3 the scene
failed validation.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io, schema
from .errors import ArgumentError, DataError, PrecisionError, SceneError, WbsdfError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SCENE = 0, 1, 2, 3


class InputError(Exception):
    """Bad user input; ``problems`` are ``pointer: message`` strings."""

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def _kv(tokens, what):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise InputError([f"/microstructure: {what} expects key=value pairs, got {tok!r}"])
        k, v = tok.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError([f"/: {what} file {path} not found"]) from None
    except json.JSONDecodeError as e:
        raise InputError([f"/: {what} is not valid JSON ({e})"]) from None


def _check(doc, sch):
    probs = schema.problems(doc, sch)
    if probs:
        raise InputError(probs)


# wdf ------------------------------------------------------------------------

def _wdf_config(a) -> dict:
    if a.config:
        cfg = _read_json(a.config, "config")
    else:
        if a.grating is not None:
            micro = {"kind": "sinusoidal_grating", **_kv(a.grating, "--grating")}
        elif a.binary is not None:
            micro = {"kind": "binary_phase_grating", **_kv(a.binary, "--binary")}
        elif a.slit is not None:
            micro = {"kind": "slit", "width": a.slit}
        elif a.double_slit is not None:
            micro = {"kind": "double_slit", "width": a.double_slit[0], "separation": a.double_slit[1]}
        elif a.heightfield:
            micro = {"kind": "heightfield", "csv": a.heightfield}
        else:
            micro = {"kind": "flat"}
        if a.mode:
            micro["mode"] = a.mode
        cfg = {"version": 1, "microstructure": micro, "grid": {"n": a.n, "dx": a.dx}}
        if a.wavelength is not None:
            cfg["wavelength"] = a.wavelength
        if a.boundary:
            cfg["boundary"] = a.boundary
    _check(cfg, schema.WDF_CONFIG)
    return cfg


def cmd_wdf(a) -> int:
    from .field import marginals, wdf_1d
    from .microstructure import GridSpec, realize
    from .scene import _micro_from_dict

    cfg = _wdf_config(a)
    ms = cfg["microstructure"]
    lam = cfg.get("wavelength", 550e-9)
    g = cfg["grid"]
    kind = ms["kind"]
    default_bnd = "periodic" if kind in ("sinusoidal_grating", "binary_phase_grating", "flat") else "zero"
    bnd = cfg.get("boundary", default_bnd)
    try:
        micro = _micro_from_dict(ms)
        t = realize(micro, lam, cfg.get("theta_i", 0.0), GridSpec(g["n"], g["dx"], g.get("x0")))
        w = wdf_1d(t, bnd)
    except (ArgumentError, DataError, PrecisionError) as e:
        raise InputError([f"/microstructure: {e}"]) from None

    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    w.to_csv(out / "table.csv")
    io.write_table(out / "table.wbsdf", w, micro.mode, lam)
    ix, su = marginals(w)
    with open(out / "u_marginal.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["u_cycles_per_meter", "sin_theta", "spectrum"])
        for u, v in zip(w.u, su):
            wr.writerow([repr(float(u)), repr(float(u * lam)), repr(float(v))])

    s = np.concatenate([t.samples, np.zeros(len(w.x) - t.n)]) if len(w.x) > t.n else t.samples
    T = t.dx * np.fft.fftshift(np.fft.fft(s))
    x_err = float(np.max(np.abs(ix - np.abs(s) ** 2)) / max(np.max(np.abs(s) ** 2), 1e-300))
    u_err = float(np.max(np.abs(su - np.abs(T) ** 2)) / max(np.max(np.abs(T) ** 2), 1e-300))
    rep = {"microstructure": ms, "wavelength": lam, "boundary": bnd, "rows": w.values.shape[0],
           "bins": w.values.shape[1], "dx": w.dx, "du": w.du,
           "x_marginal_rel_error": x_err, "u_marginal_rel_error": u_err}
    peak = int(np.argmax(np.abs(su)))
    if kind == "flat" and np.count_nonzero(np.abs(su) > 1e-9 * np.abs(su).max()) == 1:
        rep["spectrum"] = "delta at u=0" if abs(w.u[peak]) < 0.5 * w.du else f"delta at u={w.u[peak]:.6g}"
    if kind == "slit":
        c = int(np.argmin(np.abs(w.u)))
        right = su[c:]
        k = int(np.argmax(np.diff(right) > 0)) if np.any(np.diff(right) > 0) else len(right) - 1
        rep["first_zero_u"] = float(w.u[c + k])
        rep["first_zero_expected_u"] = 1.0 / ms["width"]
    io.write_json(out / "report.json", rep)
    print(f"wdf: {rep['rows']} x {rep['bins']} table, marginal identities "
          f"x {x_err:.2e}, u {u_err:.2e} (relative)")
    if "spectrum" in rep:
        print(f"wdf: {rep['spectrum']}")
    if "first_zero_u" in rep:
        print(f"wdf: first zero at u = {rep['first_zero_u']:.6g} (1/w = {rep['first_zero_expected_u']:.6g})")
    return EXIT_OK


# render ---------------------------------------------------------------------

def cmd_render(a) -> int:
    from .render import render
    from .scene import scene_from_dict

    doc = _read_json(a.scene, "scene")
    probs = schema.problems(doc, schema.SCENE)
    if probs:
        for p in probs:
            print(f"scene error: {p}", file=sys.stderr)
        return EXIT_SCENE
    try:
        sc = scene_from_dict(doc, Path(a.scene).parent)
    except (SceneError, ArgumentError, DataError, PrecisionError) as e:
        print(f"scene error: {e}", file=sys.stderr)
        return EXIT_SCENE
    r = doc.get("render", {})
    spp = a.spp or r.get("spp", 64)
    seed = a.seed if a.seed is not None else r.get("seed", 0)
    threads = a.threads or r.get("threads")
    t0 = time.perf_counter()
    img = render(sc, spp=spp, seed=seed, threads=threads)
    wall = time.perf_counter() - t0
    spectral, nn = img.finalize()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_pfm(out / "image.pfm", img.rgb())
    io.write_ppm(out / "image.ppm", img.rgb())
    for b, lam in enumerate(sc.wavelengths):
        io.write_pfm(out / f"bin_{lam * 1e9:.0f}nm.pfm", spectral[b])
    stats = {"scene": str(a.scene), "spp": spp, "seed": seed, "wall_time_s": wall,
             "min_pixel_before_clamp": nn["min_before_clamp"], "max_pixel": nn["max"],
             "nonnegative": nn["ok"], "rays": img.stats["rays"],
             "paraxial_rejected": img.stats["paraxial_rejected"],
             "paraxial_rejected_fraction": img.stats["paraxial_rejected_fraction"],
             "evanescent": img.stats["evanescent"],
             "negative_samples": img.stats["negative_samples"]}
    if a.compare_uniform:
        uni = render(sc, spp=spp, seed=seed, threads=threads, strategy="uniform")
        stats["variance_ratio"] = float(uni.variance.sum() / img.variance.sum())
    io.write_json(out / "stats.json", stats)
    msg = f"render: {spp} spp in {wall:.1f} s, min before clamp {nn['min_before_clamp']:.3e}"
    if "variance_ratio" in stats:
        msg += f", variance ratio uniform/importance {stats['variance_ratio']:.2f}"
    print(msg)
    if not nn["ok"]:
        print("render: non-negativity check failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# validate -------------------------------------------------------------------

def cmd_validate(a) -> int:
    from .checks import CHECKS, run_check

    if a.list:
        print("\n".join(CHECKS))
        return EXIT_OK
    cfg = {"version": 1}
    if a.config:
        cfg = _read_json(a.config, "config")
        _check(cfg, schema.VALIDATE_CONFIG)
    overrides = cfg.get("checks", {})
    unknown = [n for n in list(a.only or []) + list(overrides) if n not in CHECKS]
    if unknown:
        raise InputError([f"/checks/{n}: unknown check (see --list)" for n in unknown])
    names = a.only or list(CHECKS)
    results = []
    for n in names:
        r = run_check(n, overrides.get(n))
        print(r.line(), flush=True)
        if not r.passed:
            for msg in [r.detail.get("error")] + list(r.detail.get("undersampled", [])):
                if msg:
                    print(f"    {msg}")
        results.append(r)
    passed = all(r.passed for r in results)
    print(f"validate: {sum(r.passed for r in results)}/{len(results)} checks passed")
    if a.out:
        out = Path(a.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "report.json", {"passed": passed, "checks": [r.as_dict() for r in results]})
    return EXIT_OK if passed else EXIT_FAIL


# psf ------------------------------------------------------------------------

def cmd_psf(a) -> int:
    from .psf import LensSpec, apply_psf, build_stack, depth_planes
    from .render import default_threads

    threads = a.threads or default_threads()
    try:
        lens = LensSpec(a.focal_length, a.f_number, a.focus)
        depths = depth_planes(a.near, a.far, a.planes)
        fields = [np.radians(f) for f in a.field_deg]
        stack = build_stack(lens, depths, fields, a.wavelengths, kernel_size=a.kernel_size,
                            pitch=a.pitch, threads=threads)
    except (ArgumentError, PrecisionError) as e:
        raise InputError([f"/psf: {e}"]) from None
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    blob, idx = io.write_psf_bundle(out / "psf_bundle", stack)
    print(f"psf: {len(stack.kernels)} kernels, pitch {stack.pitch:.3e} m -> {blob.name}, {idx.name}")
    if a.apply:
        if not a.depth:
            raise InputError(["/psf/depth: --apply needs --depth"])
        try:
            img = io.read_pfm(a.apply)
            dm = io.read_pfm(a.depth)
        except (OSError, DataError) as e:
            raise InputError([f"/psf/apply: {e}"]) from None
        if dm.ndim == 3:
            dm = dm[..., 0]
        try:
            blurred = apply_psf(img, stack, dm, threads=threads, mode=a.blur_mode)
        except ArgumentError as e:
            raise InputError([f"/psf/apply: {e}"]) from None
        io.write_pfm(out / "blurred.pfm", blurred)
        print("psf: wrote blurred.pfm")
    return EXIT_OK


# entry ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wbsdf-kit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    w = sub.add_parser("wdf", help="build a Wigner table for a microstructure")
    src = w.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON config (version 1)")
    src.add_argument("--grating", nargs="+", metavar="KEY=VAL", help="sinusoidal grating, e.g. m=2.0 p=2e-6")
    src.add_argument("--binary", nargs="+", metavar="KEY=VAL", help="binary phase grating, e.g. h=1.4e-7 p=2e-6")
    src.add_argument("--slit", type=float, metavar="WIDTH")
    src.add_argument("--double-slit", type=float, nargs=2, metavar=("WIDTH", "SEPARATION"))
    src.add_argument("--heightfield", metavar="CSV", help="x_meters,height_meters rows")
    src.add_argument("--flat", action="store_true")
    w.add_argument("--mode", choices=["reflective", "transmissive"])
    w.add_argument("--n", type=int, default=512)
    w.add_argument("--dx", type=float, default=2e-8)
    w.add_argument("--wavelength", type=float)
    w.add_argument("--boundary", choices=["zero", "periodic"])
    w.add_argument("--out", default="wdf_out")
    w.set_defaults(func=cmd_wdf)

    r = sub.add_parser("render", help="render a scene")
    r.add_argument("scene")
    r.add_argument("--out", default="render_out")
    r.add_argument("--spp", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--compare-uniform", action="store_true",
                   help="also render with uniform bin sampling and report the variance ratio")
    r.set_defaults(func=cmd_render)

    v = sub.add_parser("validate", help="run the cross-checks")
    v.add_argument("--only", nargs="+", metavar="CHECK")
    v.add_argument("--config", help="JSON with per-check parameter overrides")
    v.add_argument("--out", help="directory for report.json")
    v.add_argument("--list", action="store_true")
    v.set_defaults(func=cmd_validate)

    p = sub.add_parser("psf", help="thin-lens PSF stack and optional depth-dependent blur")
    p.add_argument("--focal-length", type=float, default=0.05)
    p.add_argument("--f-number", type=float, default=5.6)
    p.add_argument("--focus", type=float, default=2.0, help="focus distance (m)")
    p.add_argument("--near", type=float, default=1.0)
    p.add_argument("--far", type=float, default=10.0)
    p.add_argument("--planes", type=int, default=8)
    p.add_argument("--field-deg", type=float, nargs="+", default=[0.0])
    p.add_argument("--wavelengths", type=float, nargs="+", default=[550e-9])
    p.add_argument("--kernel-size", type=int, default=65)
    p.add_argument("--pitch", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--apply", metavar="IMAGE_PFM")
    p.add_argument("--depth", metavar="DEPTH_PFM")
    p.add_argument("--blur-mode", choices=["scatter", "gather"], default="scatter",
                   help="scatter conserves energy; gather uses each output pixel's kernel")
    p.add_argument("--out", default="psf_out")
    p.set_defaults(func=cmd_psf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return a.func(a)
    except InputError as e:
        for p in e.problems:
            print(f"input error: {p}", file=sys.stderr)
        return EXIT_INPUT
    except SceneError as e:
        print(f"scene error: {e}", file=sys.stderr)
        return EXIT_SCENE
    except WbsdfError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

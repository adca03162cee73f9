"""Scene description: rectangles, lights, thin-lens camera, and the JSON schema.

JSON layout (``"version": 1``)::

    {
      "version": 1,
      "wavelengths": [4.5e-7, 5.5e-7, 6.5e-7],
      "tables": {"cd": {"microstructure": {"kind": "sinusoidal_grating", "p": 2e-6, "m": 2.0,
                                          "mode": "reflective"},
                        "grid": {"n": 256, "dx": 6.25e-8}, "boundary": "periodic",
                        "footprint": "patch"}},
      "patches": [{"name": "wall", "corner": [..], "edge_u": [..], "edge_v": [..],
                   "material": {"type": "diffuse", "albedo": 0.8}},
                  {"name": "cd", ..., "material": {"type": "wbsdf", "table": "cd", "axis": "u"}}],
      "lights": [{"type": "area", "corner": [..], "edge_u": [..], "edge_v": [..],
                  "radiance": 1.0, "coherence_group": 0},
                 {"type": "point", "position": [..], "intensity": 1.0, "coherence_group": 1}],
      "camera": {"position": [..], "look_at": [..], "up": [0, 1, 0], "focal_length": 0.05,
                 "aperture_radius": 0.005, "width": 128, "height": 128, "pixel_pitch": 1e-4},
      "render": {"spp": 64, "seed": 0, "threads": 1, "max_depth": 5}
    }

All lengths are meters.  Area lights emit from the side their normal
``edge_u x edge_v`` points to and absorb light arriving from either side.
A table's ``footprint`` is the width (meters) over which table rows are
averaged before use, or ``"patch"`` for the whole table; ``0`` keeps the
signed per-position rows.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ArgumentError, SceneError
from .field import WignerTable
from .microstructure import GridSpec, Microstructure, check_wavelength
from .wbsdf import WBSDF

DEFAULT_WAVELENGTHS = (450e-9, 550e-9, 650e-9)
MAX_SPECTRAL_BINS = 16


def _vec(v, name):
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise SceneError(f"{name} must be a finite 3-vector")
    return a


@dataclass
class Rect:
    corner: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray

    def __post_init__(self):
        self.corner = _vec(self.corner, "corner")
        self.edge_u = _vec(self.edge_u, "edge_u")
        self.edge_v = _vec(self.edge_v, "edge_v")
        lu, lv = np.linalg.norm(self.edge_u), np.linalg.norm(self.edge_v)
        if lu <= 0 or lv <= 0:
            raise SceneError("degenerate rectangle (zero-length edge)")
        if abs(np.dot(self.edge_u, self.edge_v)) > 1e-9 * lu * lv:
            raise SceneError("rectangle edges must be orthogonal")

    @property
    def normal(self):
        n = np.cross(self.edge_u, self.edge_v)
        return n / np.linalg.norm(n)

    @property
    def area(self):
        return float(np.linalg.norm(self.edge_u) * np.linalg.norm(self.edge_v))


@dataclass
class Material:
    type: str  # diffuse | mirror | wbsdf
    albedo: float = 0.8
    table: Optional[str] = None
    axis: str = "u"

    def __post_init__(self):
        if self.type not in ("diffuse", "mirror", "wbsdf"):
            raise SceneError(f"unknown material {self.type!r}")
        if self.type == "wbsdf" and not self.table:
            raise SceneError("wbsdf material needs a table reference")
        if self.axis not in ("u", "v"):
            raise SceneError("wbsdf axis must be 'u' or 'v'")
        if not 0 <= self.albedo <= 1:
            raise SceneError("albedo must lie in [0, 1]")


@dataclass
class Patch:
    rect: Rect
    material: Material
    name: str = ""


@dataclass
class AreaLight:
    rect: Rect
    radiance: Union[float, list] = 1.0
    coherence_group: int = 0


@dataclass
class PointLight:
    position: np.ndarray
    intensity: Union[float, list] = 1.0
    coherence_group: int = 0

    def __post_init__(self):
        self.position = _vec(self.position, "position")


@dataclass
class Camera:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    focal_length: float = 0.05
    aperture_radius: float = 0.005
    width: int = 64
    height: int = 64
    pixel_pitch: float = 1e-4
    focus_distance: Optional[float] = None

    def __post_init__(self):
        self.position = _vec(self.position, "camera position")
        self.look_at = _vec(self.look_at, "camera look_at")
        self.up = _vec(self.up, "camera up")
        if not self.aperture_radius > 0:
            raise SceneError("aperture radius must be > 0 (pinhole cameras are not supported)")
        if self.focal_length <= 0 or self.pixel_pitch <= 0:
            raise SceneError("focal length and pixel pitch must be positive")
        if self.width < 1 or self.height < 1:
            raise SceneError("film must have at least one pixel")
        fwd = self.look_at - self.position
        if np.linalg.norm(fwd) == 0 or np.linalg.norm(np.cross(fwd, self.up)) == 0:
            raise SceneError("camera look direction is degenerate")
        if self.focus_distance is None:
            self.focus_distance = float(np.linalg.norm(fwd))
        if self.focus_distance <= self.focal_length:
            raise SceneError("focus distance must exceed the focal length")

    def frame(self):
        f = self.look_at - self.position
        f = f / np.linalg.norm(f)
        r = np.cross(f, self.up)
        r /= np.linalg.norm(r)
        return f, r, np.cross(r, f)

    @property
    def film_distance(self):
        """Thin-lens conjugate ``1/f = 1/s + 1/s'`` of the focus distance."""
        f, s = self.focal_length, self.focus_distance
        return f * s / (s - f)


@dataclass
class Scene:
    patches: list
    lights: list
    camera: Camera
    wavelengths: tuple = DEFAULT_WAVELENGTHS
    tables: dict = field(default_factory=dict)
    max_depth: int = 5
    paraxial_limit: float = np.radians(60.0)

    def validate(self):
        if not 1 <= len(self.wavelengths) <= MAX_SPECTRAL_BINS:
            raise SceneError(f"1..{MAX_SPECTRAL_BINS} spectral bins supported")
        for lam in self.wavelengths:
            try:
                check_wavelength(lam)
            except ArgumentError as e:
                raise SceneError(str(e)) from None
        for p in self.patches:
            if p.material.type == "wbsdf" and p.material.table not in self.tables:
                raise SceneError(f"patch {p.name!r} references missing table {p.material.table!r}")
        if self.max_depth < 1:
            raise SceneError("max_depth must be >= 1")
        return self

    @property
    def groups(self):
        return sorted({l.coherence_group for l in self.lights})


# JSON ---------------------------------------------------------------------

def _micro_from_dict(d: dict) -> Microstructure:
    d = dict(d)
    kind = d.pop("kind")
    mode = d.pop("mode", None)
    kw = {"mode": mode} if mode else {}
    if "index" in d:
        kw["index"] = d.pop("index")
    if kind == "flat":
        return Microstructure.flat(**kw)
    if kind == "sinusoidal_grating":
        return Microstructure.sinusoidal_grating(d["p"], m=d.get("m"), height=d.get("height"), **kw)
    if kind == "binary_phase_grating":
        return Microstructure.binary_phase_grating(d["h"], d["p"], d.get("duty", 0.5), **kw)
    if kind == "slit":
        return Microstructure.slit(d["width"], **kw)
    if kind == "double_slit":
        return Microstructure.double_slit(d["width"], d["separation"], **kw)
    if kind == "heightfield":
        if "csv" in d:
            from .microstructure import load_heightfield_csv
            return load_heightfield_csv(d["csv"], **kw)
        return Microstructure.heightfield(d["samples"], d["dx"], **kw)
    raise SceneError(f"microstructure kind {kind!r} is not usable in scenes")


def build_table(spec: dict, wavelengths, base: Path = Path(".")) -> WBSDF:
    """Build (or load) a WBSDF from a scene ``tables`` entry."""
    if "file" in spec:
        from .io import read_wbsdf
        b = read_wbsdf(base / spec["file"])
    else:
        micro = _micro_from_dict(spec["microstructure"])
        g = spec["grid"]
        grid = GridSpec(int(g["n"]), float(g["dx"]), g.get("x0"))
        b = WBSDF.from_microstructure(micro, wavelengths, grid, spec.get("boundary", "periodic"))
    fp = spec.get("footprint", 0)
    if fp == "patch" or (isinstance(fp, (int, float)) and fp > 0):
        b = b.prefiltered(None if fp == "patch" else float(fp))
    return b


def scene_from_dict(d: dict, base: Path = Path(".")) -> Scene:
    if d.get("version") != 1:
        raise SceneError("scene version must be 1")
    lams = tuple(float(x) for x in d.get("wavelengths", DEFAULT_WAVELENGTHS))
    tables = {name: build_table(spec, lams, base) for name, spec in d.get("tables", {}).items()}
    patches = []
    for p in d.get("patches", []):
        m = p.get("material", {"type": "diffuse"})
        patches.append(Patch(Rect(p["corner"], p["edge_u"], p["edge_v"]),
                             Material(m["type"], m.get("albedo", 0.8), m.get("table"), m.get("axis", "u")),
                             p.get("name", "")))
    lights = []
    for l in d.get("lights", []):
        if l["type"] == "area":
            lights.append(AreaLight(Rect(l["corner"], l["edge_u"], l["edge_v"]),
                                    l.get("radiance", 1.0), int(l.get("coherence_group", 0))))
        elif l["type"] == "point":
            lights.append(PointLight(l["position"], l.get("intensity", 1.0), int(l.get("coherence_group", 0))))
        else:
            raise SceneError(f"unknown light type {l['type']!r}")
    cam = Camera(**d["camera"])
    r = d.get("render", {})
    sc = Scene(patches, lights, cam, lams, tables, int(r.get("max_depth", 5)),
               np.radians(float(r.get("paraxial_limit_deg", 60.0))))
    return sc.validate()


def load_scene(path) -> tuple[Scene, dict]:
    """Returns the scene and its ``render`` settings block."""
    path = Path(path)
    d = json.loads(path.read_text())
    return scene_from_dict(d, path.parent), d.get("render", {})

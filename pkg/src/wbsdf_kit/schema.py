"""JSON schemas for the CLI inputs; violations are reported as JSON pointers."""
from __future__ import annotations

import jsonschema

_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_SPECTRUM = {"oneOf": [{"type": "number", "minimum": 0},
                       {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}]}

MICROSTRUCTURE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["flat", "sinusoidal_grating", "binary_phase_grating", "slit", "double_slit", "heightfield"]},
        "mode": {"enum": ["reflective", "transmissive"]},
        "p": _POS, "m": {"type": "number", "minimum": 0}, "height": _POS, "h": _POS,
        "duty": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "width": _POS, "separation": _POS, "index": _POS,
        "csv": {"type": "string"}, "dx": _POS,
        "samples": {"type": "array", "items": {"type": "number"}},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "sinusoidal_grating"}}},
         "then": {"required": ["p"], "oneOf": [{"required": ["m"]}, {"required": ["height"]}]}},
        {"if": {"properties": {"kind": {"const": "binary_phase_grating"}}}, "then": {"required": ["h", "p"]}},
        {"if": {"properties": {"kind": {"const": "slit"}}}, "then": {"required": ["width"]}},
        {"if": {"properties": {"kind": {"const": "double_slit"}}}, "then": {"required": ["width", "separation"]}},
        {"if": {"properties": {"kind": {"const": "heightfield"}}},
         "then": {"oneOf": [{"required": ["csv"]}, {"required": ["samples", "dx"]}]}},
    ],
    "additionalProperties": False,
}

GRID = {
    "type": "object",
    "required": ["n", "dx"],
    "properties": {"n": {"type": "integer", "minimum": 2}, "dx": _POS, "x0": {"type": "number"}},
    "additionalProperties": False,
}

WDF_CONFIG = {
    "type": "object",
    "required": ["version", "microstructure", "grid"],
    "properties": {
        "version": {"const": 1},
        "microstructure": MICROSTRUCTURE,
        "grid": GRID,
        "wavelength": {"type": "number", "minimum": 1e-7, "maximum": 1e-5},
        "boundary": {"enum": ["zero", "periodic"]},
        "theta_i": {"type": "number"},
    },
    "additionalProperties": False,
}

_RECT = {"corner": _VEC3, "edge_u": _VEC3, "edge_v": _VEC3}

SCENE = {
    "type": "object",
    "required": ["version", "patches", "lights", "camera"],
    "properties": {
        "version": {"const": 1},
        "description": {"type": "string"},
        "wavelengths": {"type": "array", "items": {"type": "number", "minimum": 1e-7, "maximum": 1e-5},
                        "minItems": 1, "maxItems": 16},
        "tables": {"type": "object", "additionalProperties": {
            "type": "object",
            "properties": {"microstructure": MICROSTRUCTURE, "grid": GRID, "file": {"type": "string"},
                           "boundary": {"enum": ["zero", "periodic"]},
                           "footprint": {"oneOf": [{"const": "patch"}, {"type": "number", "minimum": 0}]}},
            "oneOf": [{"required": ["file"]}, {"required": ["microstructure", "grid"]}],
            "additionalProperties": False}},
        "patches": {"type": "array", "items": {
            "type": "object", "required": ["corner", "edge_u", "edge_v"],
            "properties": {**_RECT, "name": {"type": "string"}, "material": {
                "type": "object", "required": ["type"],
                "properties": {"type": {"enum": ["diffuse", "mirror", "wbsdf"]},
                               "albedo": {"type": "number", "minimum": 0, "maximum": 1},
                               "table": {"type": "string"}, "axis": {"enum": ["u", "v"]}},
                "additionalProperties": False}},
            "additionalProperties": False}},
        "lights": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["type"],
            "properties": {**_RECT, "type": {"enum": ["area", "point"]}, "position": _VEC3,
                           "radiance": _SPECTRUM, "intensity": _SPECTRUM,
                           "coherence_group": {"type": "integer", "minimum": 0}},
            "allOf": [{"if": {"properties": {"type": {"const": "area"}}},
                       "then": {"required": ["corner", "edge_u", "edge_v"]}},
                      {"if": {"properties": {"type": {"const": "point"}}}, "then": {"required": ["position"]}}],
            "additionalProperties": False}},
        "camera": {"type": "object", "required": ["position", "look_at"],
                   "properties": {"position": _VEC3, "look_at": _VEC3, "up": _VEC3, "focal_length": _POS,
                                  "aperture_radius": _POS, "width": {"type": "integer", "minimum": 1},
                                  "height": {"type": "integer", "minimum": 1}, "pixel_pitch": _POS,
                                  "focus_distance": _POS},
                   "additionalProperties": False},
        "render": {"type": "object",
                   "properties": {"spp": {"type": "integer", "minimum": 1},
                                  "seed": {"type": "integer", "minimum": 0},
                                  "threads": {"type": "integer", "minimum": 1},
                                  "max_depth": {"type": "integer", "minimum": 1},
                                  "paraxial_limit_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 90}},
                   "additionalProperties": False},
    },
    "additionalProperties": False,
}

VALIDATE_CONFIG = {
    "type": "object",
    "required": ["version"],
    "properties": {"version": {"const": 1}, "checks": {"type": "object",
                                                        "additionalProperties": {"type": "object"}}},
    "additionalProperties": False,
}


def pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else "/"


def problems(doc, schema) -> list:
    """``["<json pointer>: <message>", ...]`` sorted by location; empty when valid."""
    v = jsonschema.Draft202012Validator(schema)
    errs = sorted(v.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    return [f"{pointer(e.absolute_path)}: {e.message}" for e in errs]

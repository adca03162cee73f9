"""File formats: PFM/PPM images, binary WBSDF tables, PSF bundles, JSON sidecars."""
from __future__ import annotations

import io as _stdio
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .field import WignerTable
from .wbsdf import WBSDF

MAGIC = b"WBSDF1"
_HEADER = struct.Struct("<9d")


def write_pfm(path, img: np.ndarray) -> None:
    """Little-endian PFM; ``img`` is ``(h, w)`` or ``(h, w, 3)``, row 0 at the top.

    ``path`` may also be a binary file object.
    """
    a = np.asarray(img, dtype="<f4")
    if a.ndim == 2:
        tag = b"Pf"
    elif a.ndim == 3 and a.shape[2] == 3:
        tag = b"PF"
    else:
        raise DataError("PFM needs a (h, w) or (h, w, 3) array")
    h, w = a.shape[:2]
    data = tag + b"\n" + f"{w} {h}\n".encode() + b"-1.0\n" + np.ascontiguousarray(a[::-1]).tobytes()
    if hasattr(path, "write"):
        path.write(data)
    else:
        Path(path).write_bytes(data)  # PFM stores bottom row first


def read_pfm(path) -> np.ndarray:
    """Inverse of :func:`write_pfm`; ``path`` may be a binary file object."""
    with (path if hasattr(path, "read") else open(path, "rb")) as fh:
        tag = fh.readline().strip()
        if tag not in (b"PF", b"Pf"):
            raise DataError("not a PFM file")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        raw = fh.read()
    c = 3 if tag == b"PF" else 1
    if len(raw) != 4 * w * h * c:
        raise DataError("truncated PFM")
    data = np.frombuffer(raw, dtype="<f4" if scale < 0 else ">f4")
    a = data.reshape(h, w, c)[::-1].astype(np.float64)
    return a[..., 0] if c == 1 else a


def write_ppm(path, rgb: np.ndarray, exposure: float = None, gamma: float = 2.2) -> None:
    """8-bit binary PPM preview; ``exposure=None`` maps the 99.5th percentile to white."""
    a = np.clip(np.asarray(rgb, dtype=float), 0.0, None)
    if a.ndim == 2:
        a = np.repeat(a[..., None], 3, axis=2)
    if exposure is None:
        ref = np.percentile(a, 99.5) if a.size else 0.0
        exposure = 1.0 / ref if ref > 0 else 1.0
    v = np.clip(a * exposure, 0.0, 1.0) ** (1.0 / gamma)
    b = np.round(v * 255).astype(np.uint8)
    h, w = b.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(b.tobytes())


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# binary tables ------------------------------------------------------------
# record: MAGIC, 9 little-endian doubles
#   [rows, cols, dx, du, x0, u0, wavelength (0: none), mode (0 reflective, 1 transmissive),
#    boundary (0 zero, 1 periodic)]
# then rows * cols little-endian doubles, row-major (x outer).  Records are concatenated.

def _record(w: WignerTable, lam, mode) -> bytes:
    r, c = w.values.shape
    head = _HEADER.pack(r, c, w.dx, w.du, w.x0, w.u0, 0.0 if lam is None else lam,
                        0.0 if mode == "reflective" else 1.0,
                        1.0 if w.meta.get("boundary") == "periodic" else 0.0)
    return MAGIC + head + np.ascontiguousarray(w.values, dtype="<f8").tobytes()


def write_wbsdf(path, b: WBSDF) -> None:
    with open(path, "wb") as fh:
        lams = b.wavelengths or [None]
        for lam in lams:
            fh.write(_record(b.table(lam), lam, b.mode))


def write_table(path, w: WignerTable, mode: str = "reflective", lam=None) -> None:
    Path(path).write_bytes(_record(w, lam, mode))


def read_wbsdf(path) -> WBSDF:
    data = Path(path).read_bytes()
    pos = 0
    tables = {}
    mode = None
    while pos < len(data):
        if data[pos:pos + len(MAGIC)] != MAGIC:
            raise DataError(f"bad magic at byte {pos}")
        pos += len(MAGIC)
        if pos + _HEADER.size > len(data):
            raise DataError("truncated header")
        rows, cols, dx, du, x0, u0, lam, m, bnd = _HEADER.unpack_from(data, pos)
        pos += _HEADER.size
        periodic = bnd == 1.0
        rows, cols = int(rows), int(cols)
        n = rows * cols * 8
        if rows < 1 or cols < 1 or pos + n > len(data):
            raise DataError("truncated or malformed table body")
        v = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=pos).reshape(rows, cols)
        pos += n
        rec_mode = "reflective" if m == 0.0 else "transmissive"
        if mode is not None and rec_mode != mode:
            raise DataError("records disagree on mode")
        mode = rec_mode
        meta = {"boundary": "periodic" if periodic else "zero"}
        tables[None if lam == 0.0 else lam] = WignerTable(v.copy(), dx, du, x0, u0, meta=meta)
    if not tables:
        raise DataError("empty table file")
    return WBSDF(tables, mode)


# PSF bundles ----------------------------------------------------------------
# <name>.pfm holds one grayscale PFM per kernel, concatenated; <name>.json lists
# each kernel's key, byte offset and length plus the lens and sampling metadata.

def write_psf_bundle(prefix, stack) -> tuple[Path, Path]:
    prefix = Path(prefix)
    blob = prefix.with_suffix(".pfm")
    index = {"version": 1, "pitch_m": stack.pitch, "depths_m": list(map(float, stack.depths)),
             "fields_rad": [list(f) for f in stack.fields], "wavelengths_m": list(stack.wavelengths),
             "lens": dict(stack.meta), "kernels": []}
    offset = 0
    with open(blob, "wb") as fh:
        for (fi, di, bi), k in sorted(stack.kernels.items()):
            buf = _stdio.BytesIO()
            write_pfm(buf, k)
            data = buf.getvalue()
            fh.write(data)
            index["kernels"].append({"field": fi, "depth": di, "bin": bi, "offset": offset, "length": len(data),
                                     "shape": list(k.shape)})
            offset += len(data)
    js = prefix.with_suffix(".json")
    write_json(js, index)
    return blob, js


def read_psf_bundle(prefix):
    """Returns ``(index, {(field, depth, bin): kernel})``."""
    prefix = Path(prefix)
    index = json.loads(prefix.with_suffix(".json").read_text())
    data = prefix.with_suffix(".pfm").read_bytes()
    out = {}
    for e in index["kernels"]:
        chunk = data[e["offset"]:e["offset"] + e["length"]]
        if len(chunk) != e["length"]:
            raise DataError("PSF bundle is truncated")
        out[(e["field"], e["depth"], e["bin"])] = read_pfm(_stdio.BytesIO(chunk))
    return index, out

"""Thin-lens point-spread functions from the pupil function, and depth-dependent blurring.

The pupil is a circular aperture carrying the defocus phase of a converging
spherical wave whose focus misses the film.  Its Fraunhofer pattern is
evaluated directly on film pixels with a separable matrix Fourier transform,
supersampled inside each pixel and box-averaged, so no separate resampling
of an FFT grid is needed.  Off-axis sources see a pupil foreshortened by
``cos(alpha)`` along the field direction and a chief-ray path ``1/cos(alpha)``
longer; the linear tilt phase is cancelled by centring the kernel on the
chief-ray landing point ``film_distance * tan(alpha)``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .errors import ArgumentError, PrecisionError
from .microstructure import check_wavelength

MIN_SAMPLES_ACROSS_ZERO = 6
MAX_PUPIL_SAMPLES = 4096


@dataclass(frozen=True)
class LensSpec:
    focal_length: float
    f_number: float
    focus_distance: float

    def __post_init__(self):
        if not (self.focal_length > 0 and self.f_number > 0 and self.focus_distance > 0):
            raise ArgumentError("lens parameters must be positive")
        if self.focus_distance <= self.focal_length:
            raise ArgumentError("focus distance must exceed the focal length")

    @property
    def aperture_diameter(self) -> float:
        return self.focal_length / self.f_number

    @property
    def film_distance(self) -> float:
        return self.image_distance(self.focus_distance)

    def image_distance(self, depth: float) -> float:
        """Thin-lens conjugate of an object at ``depth``."""
        f = self.focal_length
        if depth <= f:
            raise ArgumentError("source must lie beyond the focal length")
        return f * depth / (depth - f)

    def blur_diameter(self, depth: float) -> float:
        """Geometric circle-of-confusion diameter on the film."""
        si = self.image_distance(depth)
        return self.aperture_diameter * abs(self.film_distance - si) / si


def airy_radius(lens: LensSpec, lam: float) -> float:
    """First-zero radius ``1.22 lam N`` (measured on the film)."""
    return 1.22 * lam * lens.f_number


def _mft_matrix(coords, pupil, scale):
    return np.exp(-2j * np.pi * np.outer(coords, pupil) * scale)


def compute_psf(lens: LensSpec, source_depth: float, field_angle=0.0, lam: float = 550e-9,
                kernel_size: int = 65, pitch: float = None, supersample: int = 3,
                pupil_samples: int = None) -> np.ndarray:
    """Unit-L1 intensity kernel on film pixels of size ``pitch``, centred on the chief ray.

    ``field_angle`` is an angle (radians, along film x) or a pair ``(ax, ay)``.
    ``pitch`` defaults to twelve samples across the Airy core diameter.
    """
    check_wavelength(lam)
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ArgumentError("kernel_size must be odd and >= 3")
    r0 = airy_radius(lens, lam)
    if pitch is None:
        pitch = 2 * r0 / 12
    if 2 * r0 / pitch < MIN_SAMPLES_ACROSS_ZERO:
        raise PrecisionError(
            f"pitch {pitch:.3e} m gives {2 * r0 / pitch:.2f} samples across the Airy core, "
            f"need {MIN_SAMPLES_ACROSS_ZERO}")
    ax, ay = (float(field_angle), 0.0) if np.ndim(field_angle) == 0 else map(float, field_angle)
    alpha = float(np.hypot(ax, ay))
    if alpha >= np.pi / 2:
        raise ArgumentError("field angle must be below 90 degrees")
    phi = float(np.arctan2(ay, ax))
    ca = np.cos(alpha)

    a = 0.5 * lens.aperture_diameter
    zf = lens.film_distance
    si = lens.image_distance(source_depth)
    R = zf / ca  # chief-ray distance from lens to film
    delta = ca * (1.0 / si - 1.0 / zf)  # curvature mismatch along the chief ray
    extent = kernel_size * pitch * (1.0 if alpha == 0.0 or phi == 0.0 else 1.5)  # rotated grids need the corners

    # pupil sampling: resolve the defocus phase and avoid wrap-around on the film
    q_phase = 4.0 * a * a * abs(delta) / lam  # keeps the edge phase step below pi
    q_wrap = 2.0 * a * extent / (lam * R) * 2.0
    q = pupil_samples or int(2 ** np.ceil(np.log2(max(64.0, q_phase, q_wrap))))
    if q > MAX_PUPIL_SAMPLES:
        raise PrecisionError(f"pupil needs {q} samples (> {MAX_PUPIL_SAMPLES}); reduce defocus or kernel extent")
    dp = 2 * a / q
    p = (np.arange(q) - (q - 1) / 2) * dp
    X, Y = np.meshgrid(p, p, indexing="ij")  # X along the field direction
    inside = (X / (a * ca)) ** 2 + (Y / a) ** 2 <= 1.0
    pupil = inside * np.exp(-1j * np.pi / lam * delta * (X**2 + Y**2))

    # film samples in the field-aligned frame (supersampled), then rotate onto film axes
    ss = supersample
    n_fine = kernel_size * ss
    h = pitch / ss
    half = (n_fine - 1) / 2
    if alpha == 0.0 or phi == 0.0:
        fx = (np.arange(n_fine) - half) * h
        Ax = _mft_matrix(fx * ca, p, 1.0 / (lam * R))
        Ay = _mft_matrix(fx, p, 1.0 / (lam * R))
        E = Ax @ pupil @ Ay.T
        fine = np.abs(E) ** 2
    else:
        m = int(np.ceil(n_fine * 1.5)) | 1
        hm = (m - 1) / 2
        fx = (np.arange(m) - hm) * h
        Ax = _mft_matrix(fx * ca, p, 1.0 / (lam * R))
        Ay = _mft_matrix(fx, p, 1.0 / (lam * R))
        big = np.abs(Ax @ pupil @ Ay.T) ** 2
        g = (np.arange(n_fine) - half) * h
        GX, GY = np.meshgrid(g, g, indexing="ij")
        u = np.cos(phi) * GX + np.sin(phi) * GY
        v = -np.sin(phi) * GX + np.cos(phi) * GY
        fine = ndimage.map_coordinates(big, [u / h + hm, v / h + hm], order=1, mode="constant")
    # fine is indexed [x, y]; return [row = y, col = x]
    k = fine.reshape(kernel_size, ss, kernel_size, ss).mean(axis=(1, 3)).T
    k = np.clip(k, 0.0, None)
    return k / k.sum()


def depth_planes(near: float, far: float, count: int = 8) -> np.ndarray:
    """Geometrically spaced source depths."""
    if not (0 < near < far) or count < 1:
        raise ArgumentError("need 0 < near < far and count >= 1")
    return np.geomspace(near, far, count) if count > 1 else np.array([np.sqrt(near * far)])


@dataclass
class PsfStack:
    """Kernels keyed by ``(field_index, depth_index, bin_index)``."""

    kernels: dict
    pitch: float
    depths: np.ndarray
    fields: list  # (ax, ay) per field bucket
    wavelengths: tuple
    meta: dict = field(default_factory=dict)

    def kernel(self, fi, di, bi):
        return self.kernels[(fi, di, bi)]


def build_stack(lens: LensSpec, depths, fields, wavelengths, kernel_size: int = 65,
                pitch: float = None, threads: int = 1, **kw) -> PsfStack:
    """All kernels over (field, depth, wavelength); parallel over the triples."""
    depths = np.asarray(depths, dtype=float)
    fields = [(float(f), 0.0) if np.ndim(f) == 0 else tuple(map(float, f)) for f in fields]
    lams = tuple(float(l) for l in wavelengths)
    if pitch is None:
        pitch = 2 * airy_radius(lens, min(lams)) / 12
    keys = [(fi, di, bi) for fi in range(len(fields)) for di in range(len(depths)) for bi in range(len(lams))]

    def one(key):
        fi, di, bi = key
        return compute_psf(lens, depths[di], fields[fi], lams[bi], kernel_size, pitch, **kw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            ks = list(ex.map(one, keys))
    else:
        ks = [one(k) for k in keys]
    return PsfStack(dict(zip(keys, ks)), pitch, depths, fields, lams,
                    meta={"focal_length": lens.focal_length, "f_number": lens.f_number,
                          "focus_distance": lens.focus_distance})


def _convolve(img, k):
    if np.count_nonzero(k) * img.size < 4e7:
        return signal.convolve(img, k, mode="same", method="direct")
    return signal.fftconvolve(img, k, mode="same")


def apply_psf(image: np.ndarray, stack: PsfStack, depth_map: np.ndarray, field_index=None,
              threads: int = 1, mode: str = "scatter") -> np.ndarray:
    """Spatially varying blur with per-pixel kernels.

    ``image`` is ``(h, w)`` or ``(h, w, bins)`` with bins matching the stack.
    Each pixel is assigned the kernel of its nearest depth plane (in log
    depth) and its field bucket (``field_index``: an ``(h, w)`` integer map,
    default 0).

    ``mode="scatter"`` spreads every source pixel with its own kernel,
    renormalised over the taps that land inside the image, so the total is
    conserved exactly.  ``mode="gather"`` weights the neighbourhood of every
    output pixel with the output pixel's kernel, renormalised over the taps
    inside the image; it is cheaper to reason about per pixel but does not
    conserve energy where the kernel changes.
    Pixel groups sharing a kernel run in parallel; the result does not
    depend on ``threads``.
    """
    if mode not in ("scatter", "gather"):
        raise ArgumentError("mode must be 'scatter' or 'gather'")
    img = np.asarray(image, dtype=float)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    h, w, nb = img.shape
    if nb != len(stack.wavelengths):
        raise ArgumentError(f"image has {nb} bins, stack has {len(stack.wavelengths)}")
    dm = np.asarray(depth_map, dtype=float)
    if dm.shape != (h, w):
        raise ArgumentError("depth map and image differ in shape")
    lo, hi = stack.depths.min(), stack.depths.max()
    if np.any(dm < lo) or np.any(dm > hi):
        warnings.warn(f"depths outside [{lo:g}, {hi:g}] m clamped to the nearest plane", stacklevel=2)
    dm = np.clip(dm, lo, hi)
    di = np.argmin(np.abs(np.log(dm)[..., None] - np.log(stack.depths)), axis=-1)
    fi = np.zeros((h, w), dtype=int) if field_index is None else np.asarray(field_index, dtype=int)
    ones = np.ones((h, w))
    keys = {(int(f_), int(d_)) for f_, d_ in zip(fi.ravel(), di.ravel())}
    tasks = [(b, f_, d_) for b in range(nb) for f_, d_ in sorted(keys)]

    def one(task):
        b, f_, d_ = task
        sel = (fi == f_) & (di == d_)
        k = stack.kernel(f_, d_, b)
        if mode == "gather":
            return _convolve(img[..., b], k)[sel] / _convolve(ones, k)[sel]
        kept = _convolve(ones, k[::-1, ::-1])  # share of each source's kernel inside the image
        return _convolve(np.where(sel, img[..., b] / kept, 0.0), k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(one, tasks))
    else:
        parts = [one(t) for t in tasks]
    out = np.zeros_like(img)
    for (b, f_, d_), part in zip(tasks, parts):
        if mode == "gather":
            out[..., b][(fi == f_) & (di == d_)] = part
        else:
            out[..., b] += part
    return out[..., 0] if squeeze else out

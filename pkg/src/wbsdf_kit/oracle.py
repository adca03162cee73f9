"""Brute-force scalar wave references used to validate the WBSDF path.

Scalar theory only; obliquity factors are omitted (paraxial consistency).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DataError, PrecisionError, ScopeError
from .field import ComplexGrid
from .microstructure import GridSpec, Microstructure, realize

_CHUNK = 1 << 22  # complex entries per block in the direct sums


def far_field_intensity(t: ComplexGrid, lam: float, pad: int = 1):
    """Fraunhofer intensity ``|T(u)|^2`` on the DFT lattice, mapped to ``sin(theta) = u * lam``.

    Returns ``(sin_theta, intensity)`` restricted to propagating directions.
    ``pad`` zero-pads the patch by that factor before transforming.
    """
    s = t.samples
    if s.ndim != 1:
        raise ArgumentError("expected a 1D grid")
    if pad > 1:
        s = np.concatenate([s, np.zeros((pad - 1) * len(s), dtype=complex)])
    T = t.dx * np.fft.fftshift(np.fft.fft(s))
    u = np.fft.fftshift(np.fft.fftfreq(len(s), t.dx))
    sin_t = u * lam
    keep = np.abs(sin_t) <= 1.0
    return sin_t[keep], np.abs(T[keep]) ** 2


def far_field_2d(t: ComplexGrid, lam: float):
    """2D Fraunhofer intensity for non-separable apertures. Returns ``(u, v, I)``."""
    s = t.samples
    if s.ndim != 2:
        raise ArgumentError("expected a 2D grid")
    T = t.dx**2 * np.fft.fftshift(np.fft.fft2(s))
    f = np.fft.fftshift(np.fft.fftfreq(s.shape[0], t.dx))
    return f, f, np.abs(T) ** 2


def huygens_sum(t: ComplexGrid, z: float, lam: float, receiver_points) -> np.ndarray:
    """Direct point-scatterer sum ``sum_x t(x) exp(2 pi i d / lam) / d``.

    ``receiver_points`` are lateral positions on the line at distance ``z``.
    Exact Euclidean distances, O(N M) by design.
    """
    if z <= 0:
        raise ArgumentError("z must be positive")
    xr = np.asarray(receiver_points, dtype=float)
    if xr.ndim != 1 or len(xr) < 1:
        raise ArgumentError("receiver points must be a 1D array")
    if len(xr) > 1 and not (np.all(np.diff(xr) > 0) or np.all(np.diff(xr) < 0)):
        raise ArgumentError("receiver axis must be monotone")
    s = t.samples
    xs = t.x
    lit = np.abs(s) > 0
    if not np.any(lit):
        return np.zeros(len(xr), dtype=complex)
    xs_l, s_l = xs[lit], s[lit]
    if len(xr) > 1:
        # finest fringe: sin of the steepest source-receiver ray over lam
        far = np.maximum(np.abs(xr[:, None] - xs_l.min()), np.abs(xr[:, None] - xs_l.max()))[:, 0]
        sin_max = np.max(far / np.hypot(far, z))
        spacing = np.max(np.abs(np.diff(xr)))
        if spacing > lam / (2 * sin_max):
            raise PrecisionError(
                f"receiver spacing {spacing:.3e} m exceeds Nyquist limit {lam / (2 * sin_max):.3e} m"
            )
    k = 2 * np.pi / lam
    out = np.empty(len(xr), dtype=complex)
    step = max(1, _CHUNK // len(xs_l))
    for i in range(0, len(xr), step):
        d = np.hypot(xr[i:i + step, None] - xs_l[None, :], z)
        out[i:i + step] = (s_l[None, :] * np.exp(1j * k * d) / d).sum(axis=1)
    return out


def _circulant_eigs(c: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    e = np.fft.fft(c).real
    if e.min() < -tol * max(e.max(), 1e-300):
        raise DataError(f"autocorrelation is not positive semidefinite on the grid (min eigenvalue {e.min():.3e})")
    return np.clip(e, 0.0, None)


def gaussian_heightfields(spec, n: int, dx: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` periodic Gaussian surfaces with covariance ``spec.R_h`` (circulant embedding)."""
    m = np.arange(n)
    lags = dx * np.where(m < n // 2, m, m - n)
    c = spec.R_h(lags)
    eig = _circulant_eigs(c)
    amp = np.sqrt(eig / n)
    out = np.empty((count, n))
    i = 0
    while i < count:
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = np.fft.fft(amp * z)
        out[i] = y.real
        if i + 1 < count:
            out[i + 1] = y.imag
        i += 2
    return out


def ensemble_statistical(spec, theta_i: float, lam: float, n_surfaces: int, seed: int,
                         n: int = 4096, dx: float = 50e-9, return_surfaces: bool = False):
    """Mean far-field intensity per unit length over random Gaussian surfaces.

    Each surface is realised through the tangent-plane phase, multiplied by
    the incident carrier ``exp(i k sin(theta_i) x)`` and transformed.  Returns
    ``(sin_theta, mean_intensity)`` (and the heightfields on request).
    """
    if n_surfaces < 100:
        raise ArgumentError("n_surfaces must be >= 100")
    rng = np.random.default_rng(seed)
    hs = gaussian_heightfields(spec, n, dx, n_surfaces, rng)
    grid = GridSpec(n, dx, -0.5 * n * dx)
    carrier = np.exp(2j * np.pi * np.sin(theta_i) / lam * grid.x)
    acc = None
    for h in hs:
        t = realize(Microstructure.heightfield(h, dx), lam, theta_i, grid)
        st, inten = far_field_intensity(ComplexGrid(t.samples * carrier, dx, t.x0), lam)
        acc = inten if acc is None else acc + inten
    mean = acc / (n_surfaces * n * dx)
    if return_surfaces:
        return st, mean, hs
    return st, mean


# OPD reference ------------------------------------------------------------

@dataclass(frozen=True)
class GratingScene:
    """Single-bounce scene: plane wave on a microstructure patch, far receiver arc.

    Pixels are equal bins in the outgoing ``sin(theta_o)`` over ``[-s_max, s_max]``.
    """

    micro: Microstructure
    lam: float
    theta_i: float
    grid: GridSpec
    n_pixels: int = 64
    s_max: float = 0.9
    distance: float = None  # None: 100 L^2 / lam (Fresnel number 0.01)
    bounces: int = 1

    @property
    def edges(self):
        return np.linspace(-self.s_max, self.s_max, self.n_pixels + 1)

    @property
    def patch_length(self):
        return self.grid.n * self.grid.dx

    @property
    def receiver_distance(self):
        L = self.patch_length
        return self.distance if self.distance is not None else 100 * L * L / self.lam


def opd_intensity(scene: GratingScene, sin_o) -> np.ndarray:
    """Per-unit-length intensity density over ``sin_o`` from exact path lengths."""
    t = realize(scene.micro, scene.lam, scene.theta_i, scene.grid)
    x = scene.grid.x
    k = 2 * np.pi / scene.lam
    R = scene.receiver_distance
    src = t.samples * np.exp(1j * k * x * np.sin(scene.theta_i))
    s = np.asarray(sin_o, dtype=float)
    if scene.micro.mode == "reflective":
        s_unf = -s  # mirror into the unfolded transmission frame
    else:
        s_unf = s
    out = np.empty(s.shape)
    flat_s = s_unf.ravel()
    flat_o = out.ravel()
    step = max(1, _CHUNK // len(x))
    for i in range(0, len(flat_s), step):
        ss = flat_s[i:i + step, None]
        d = np.sqrt((R * ss - x[None, :]) ** 2 + R * R * (1 - ss * ss))
        f = (src[None, :] * np.exp(1j * k * (d - R))).sum(axis=1) * t.dx
        flat_o[i:i + step] = np.abs(f) ** 2 / scene.lam
    return out / scene.patch_length


def opd_render_reference(scene: GratingScene, samples_per_dir: int, seed: int = 0,
                         target_noise: float = 0.01) -> dict:
    """Uniform outgoing-direction sampling with exact path-length phase.

    ``samples_per_dir * n_pixels`` directions are drawn uniformly in
    ``sin(theta_o)`` over ``[-1, 1]``.  Returns the pixel image, per-pixel
    estimator variance (per single sample) and the sample count needed to
    reach ``target_noise`` relative standard error on the brightest pixel.
    """
    if scene.bounces != 1:
        raise ScopeError("OPD reference supports single-bounce scenes only")
    rng = np.random.default_rng(seed)
    n = samples_per_dir * scene.n_pixels
    s = rng.uniform(-1.0, 1.0, n)
    f = opd_intensity(scene, s) * 2.0  # divide by pdf 1/2
    pix = np.digitize(s, scene.edges) - 1
    ok = (pix >= 0) & (pix < scene.n_pixels)
    m1 = np.bincount(pix[ok], f[ok], minlength=scene.n_pixels) / n
    m2 = np.bincount(pix[ok], f[ok] ** 2, minlength=scene.n_pixels) / n
    var = np.maximum(m2 - m1**2, 0.0)
    b = int(np.argmax(m1))
    needed = var[b] / (target_noise * m1[b]) ** 2 if m1[b] > 0 else np.inf
    return {"image": m1, "variance": var, "samples": n, "samples_needed": float(needed)}

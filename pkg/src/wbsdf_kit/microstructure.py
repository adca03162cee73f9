"""Parametric surface models realised as complex grids ``t(x) = a(x) exp(i Phi(x))``."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, DataError, PrecisionError
from .field import ComplexGrid

LAMBDA_MIN = 100e-9
LAMBDA_MAX = 10e-6
MIN_SAMPLES_PER_PERIOD = 8

KINDS = (
    "flat",
    "sinusoidal_grating",
    "binary_phase_grating",
    "slit",
    "double_slit",
    "circular_aperture",
    "heightfield",
)


@dataclass(frozen=True)
class GridSpec:
    n: int
    dx: float
    x0: Optional[float] = None  # None centres the patch on x = 0

    @property
    def origin(self) -> float:
        return -0.5 * self.n * self.dx if self.x0 is None else self.x0

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.n)


@dataclass(frozen=True)
class Microstructure:
    """A surface description; use the classmethod constructors.

    ``params`` holds the kind-specific geometry in meters.  Gratings accept
    either a height (converted to phase per wavelength and incidence) or a
    dimensionless peak-to-peak phase excursion ``m`` that is used verbatim.
    """

    kind: str
    params: dict = field(default_factory=dict)
    mode: str = "reflective"
    amplitude_mask: Optional[np.ndarray] = None
    index: float = 1.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown microstructure kind {self.kind!r}")
        if self.mode not in ("reflective", "transmissive"):
            raise ArgumentError(f"unknown mode {self.mode!r}")
        for key, val in self.params.items():
            if key in ("samples",):
                continue
            if key == "duty":
                if not 0 < val < 1:
                    raise ArgumentError("duty must lie in (0, 1)")
                continue
            if key == "m":
                if val < 0:
                    raise ArgumentError("phase excursion must be >= 0")
                continue
            if not (np.isfinite(val) and val > 0):
                raise ArgumentError(f"{key} must be positive, got {val}")
        if self.kind == "heightfield":
            h = np.asarray(self.params["samples"], dtype=float)
            if not np.all(np.isfinite(h)):
                raise DataError("heightfield contains non-finite values")
        if self.amplitude_mask is not None:
            a = np.asarray(self.amplitude_mask, dtype=float)
            if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
                raise DataError("amplitude mask values must lie in [0, 1]")

    # constructors -------------------------------------------------------
    @classmethod
    def flat(cls, **kw):
        return cls("flat", {}, **kw)

    @classmethod
    def sinusoidal_grating(cls, p, m=None, height=None, **kw):
        if (m is None) == (height is None):
            raise ArgumentError("give exactly one of m (phase) or height (meters)")
        params = {"p": p}
        params.update({"m": m} if m is not None else {"height": height})
        return cls("sinusoidal_grating", params, **kw)

    @classmethod
    def binary_phase_grating(cls, h, p, duty=0.5, **kw):
        return cls("binary_phase_grating", {"h": h, "p": p, "duty": duty}, **kw)

    @classmethod
    def slit(cls, width, **kw):
        kw.setdefault("mode", "transmissive")
        return cls("slit", {"width": width}, **kw)

    @classmethod
    def double_slit(cls, width, separation, **kw):
        kw.setdefault("mode", "transmissive")
        if separation <= width:
            raise ArgumentError("slit separation must exceed slit width")
        return cls("double_slit", {"width": width, "separation": separation}, **kw)

    @classmethod
    def circular_aperture(cls, radius, **kw):
        kw.setdefault("mode", "transmissive")
        return cls("circular_aperture", {"radius": radius}, **kw)

    @classmethod
    def heightfield(cls, samples, dx, **kw):
        return cls("heightfield", {"samples": np.asarray(samples, dtype=float), "dx": dx}, **kw)

    # physics ------------------------------------------------------------
    def phase_per_height(self, lam: float, theta_i: float = 0.0) -> float:
        """Radians of phase per meter of height."""
        if self.mode == "reflective":
            return 2 * np.pi / lam * (1 + np.cos(theta_i))
        return 2 * np.pi / lam * (self.index - 1)


def check_wavelength(lam: float) -> None:
    if not (LAMBDA_MIN <= lam <= LAMBDA_MAX):
        raise ArgumentError(f"wavelength {lam} m outside [{LAMBDA_MIN}, {LAMBDA_MAX}] (units are meters)")


def _need(samples_per_period: float, what: str) -> None:
    if samples_per_period < MIN_SAMPLES_PER_PERIOD - 1e-9:
        raise PrecisionError(
            f"{what}: {samples_per_period:.2f} samples per finest period, need {MIN_SAMPLES_PER_PERIOD}"
        )


def _phase(s: Microstructure, x: np.ndarray, dx: float, lam: float, theta_i: float) -> np.ndarray:
    k = s.phase_per_height(lam, theta_i)
    P = s.params
    if s.kind == "sinusoidal_grating":
        m = P["m"] if "m" in P else k * P["height"]
        _need(P["p"] / dx / max(1.0, m / 2), "sinusoidal grating")
        return 0.5 * m * np.sin(2 * np.pi * x / P["p"])
    if s.kind == "binary_phase_grating":
        _need(P["p"] / dx, "binary grating")
        frac = np.mod(x / P["p"], 1.0)
        return np.where(frac < P["duty"], k * P["h"], 0.0)
    if s.kind == "heightfield":
        h = np.asarray(P["samples"], dtype=float)
        if len(h) != len(x) or not np.isclose(P["dx"], dx, rtol=1e-12):
            xs = P["dx"] * (np.arange(len(h)) - 0.5 * len(h))
            h = np.interp(x, xs, h)
        phi = k * h
        if len(phi) > 1:
            step = np.max(np.abs(np.diff(phi)))
            if step > 0:
                _need(2 * np.pi / step, "heightfield phase")
        return phi
    return np.zeros_like(x)


def phase_profile(s: Microstructure, lam: float, theta_i: float = 0.0, grid: GridSpec = None) -> np.ndarray:
    """The phase ``Phi(x)`` that :func:`realize` exponentiates (1D kinds only)."""
    check_wavelength(lam)
    return _phase(s, grid.x, grid.dx, lam, theta_i)


def _opening(x, c, w, eps):
    return ((x >= c - 0.5 * w - eps) & (x < c + 0.5 * w - eps)).astype(float)


def _amplitude(s: Microstructure, x: np.ndarray, dx: float) -> np.ndarray:
    P = s.params
    eps = 1e-9 * dx  # half-open openings [c - w/2, c + w/2) hold round(w / dx) samples
    if s.kind == "slit":
        _need(P["width"] / dx, "slit")
        return _opening(x, 0.0, P["width"], eps)
    if s.kind == "double_slit":
        _need(P["width"] / dx, "double slit")
        c = 0.5 * P["separation"]
        return np.maximum(_opening(x, -c, P["width"], eps), _opening(x, c, P["width"], eps))
    return np.ones_like(x)


def realize(s: Microstructure, lam: float, theta_i: float = 0.0, grid: GridSpec = None) -> ComplexGrid:
    """Sample ``t(x)`` for wavelength ``lam`` and incidence ``theta_i``.

    Reflective heights use the tangent-plane factor ``(2 pi / lam)(1 + cos theta_i)``;
    transmissive heights use ``(2 pi / lam)(index - 1)``.
    """
    check_wavelength(lam)
    if grid is None:
        raise ArgumentError("a GridSpec is required")
    x = grid.x
    if s.kind == "circular_aperture":
        r = s.params["radius"]
        _need(2 * r / grid.dx, "circular aperture")
        X, Y = np.meshgrid(x, x, indexing="ij")
        t = (X**2 + Y**2 <= r * r).astype(complex)
    else:
        t = _amplitude(s, x, grid.dx) * np.exp(1j * _phase(s, x, grid.dx, lam, theta_i))
    if s.amplitude_mask is not None:
        t = t * np.asarray(s.amplitude_mask, dtype=float)
    return ComplexGrid(t, grid.dx, grid.origin)


def autocorrelation_height(s: Microstructure) -> tuple[np.ndarray, float]:
    """Unbiased lag autocorrelation of the mean-removed heightfield.

    Returns ``(R_h, sigma_h)`` with ``R_h[k]`` at lag ``k * dx`` and
    ``R_h[0] == sigma_h**2``.  A constant field gives ``R_h == 0``.
    """
    if s.kind != "heightfield":
        raise ArgumentError("autocorrelation needs a heightfield")
    h = np.asarray(s.params["samples"], dtype=float)
    h = h - h.mean()
    n = len(h)
    if not np.any(h):
        return np.zeros(n), 0.0
    full = np.correlate(h, h, mode="full")[n - 1:]
    R = full / (n - np.arange(n))
    return R, float(np.sqrt(R[0]))


def load_heightfield_csv(path, mode: str = "reflective") -> Microstructure:
    """Read ``x_meters,height_meters`` rows (uniform spacing, header optional)."""
    xs, hs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                xs.append(float(row[0]))
                hs.append(float(row[1]))
            except ValueError:
                if xs:
                    raise DataError(f"bad heightfield row {row}")
    if len(xs) < 2:
        raise DataError("heightfield needs at least two samples")
    d = np.diff(xs)
    if not np.allclose(d, d[0], rtol=1e-6):
        raise DataError("heightfield samples must be uniformly spaced")
    return Microstructure.heightfield(hs, float(d[0]), mode=mode)

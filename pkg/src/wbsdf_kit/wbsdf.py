"""Wave BSDFs: WDF tables used as angle-shift-invariant scattering kernels.

A table row ``W(x, .)`` is the kernel over the frequency shift
``du_shift = (s * sin(theta_o) - sin(theta_i)) / lambda`` with ``s = +1`` for
transmission and ``s = -1`` for reflection.  Tables keep the WDF scale, so
``sum_k W(x, k) du = |t(x)|^2``: a flat unit surface is a unit-albedo mirror.
Cosine and geometry factors are left to the renderer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, DataError, PrecisionError, SamplingError
from .field import WignerTable, wdf_1d
from .microstructure import GridSpec, Microstructure, realize

_SIGN = {"reflective": -1.0, "transmissive": 1.0}


@dataclass(frozen=True)
class _Kernel:
    table: WignerTable
    abs_cdf: np.ndarray  # per row, inclusive cumulative sum of |W|, with a leading 0
    periodic: bool


def _kernel(w: WignerTable, zero_tol: float = 1e-12) -> _Kernel:
    if not np.any(w.values):
        raise DataError("all-zero table")
    # FFT roundoff would otherwise give evanescent-only rows a tiny propagating mass
    v = _snap(w.values, zero_tol)
    if not np.array_equal(v, w.values):
        w = WignerTable(v, w.dx, w.du, w.x0, w.u0, meta=dict(w.meta))
    cdf = np.concatenate([np.zeros((v.shape[0], 1)), np.cumsum(np.abs(v), axis=1)], axis=1)
    return _Kernel(w, cdf, w.meta.get("boundary") == "periodic")


class WBSDF:
    """Per-wavelength signed scattering tables with |W|-proportional sampling.

    ``tables`` maps wavelength (meters) to a :class:`WignerTable`; a key of
    ``None`` marks a wavelength-independent table.
    """

    def __init__(self, tables: dict, mode: str = "reflective"):
        if mode not in _SIGN:
            raise ArgumentError(f"unknown mode {mode!r}")
        if not tables:
            raise ArgumentError("no tables")
        self.mode = mode
        self.sign = _SIGN[mode]
        self._kernels = {lam: _kernel(w) for lam, w in tables.items()}
        self._lams = np.array([k for k in self._kernels if k is not None], dtype=float)

    @classmethod
    def from_wdf(cls, w: WignerTable, mode: str = "reflective", lam: Optional[float] = None) -> "WBSDF":
        return cls({lam: w}, mode)

    @classmethod
    def from_microstructure(cls, s: Microstructure, wavelengths, grid: GridSpec,
                            boundary: str = "periodic", theta_i: float = 0.0) -> "WBSDF":
        tables = {float(lam): wdf_1d(realize(s, lam, theta_i, grid), boundary) for lam in wavelengths}
        return cls(tables, s.mode)

    @property
    def wavelengths(self):
        return sorted(k for k in self._kernels if k is not None)

    def table(self, lam: Optional[float] = None) -> WignerTable:
        return self._pick(lam).table

    def _pick(self, lam) -> _Kernel:
        if None in self._kernels or lam is None or len(self._lams) == 0:
            return self._kernels.get(None) or next(iter(self._kernels.values()))
        return self._kernels[float(self._lams[np.argmin(np.abs(self._lams - lam))])]

    # lookups ------------------------------------------------------------
    def _row_coord(self, k: _Kernel, x):
        w = k.table
        nrow = w.values.shape[0]
        r = (np.asarray(x, dtype=float) - w.x0) / w.dx
        if nrow == 1:
            return np.zeros_like(r), np.ones_like(r, dtype=bool)
        if k.periodic:
            return np.mod(r, nrow), np.ones_like(r, dtype=bool)
        inside = (r >= 0) & (r <= nrow - 1)
        return np.clip(r, 0, nrow - 1), inside

    def prefiltered(self, width: Optional[float] = None, zero_tol: float = 1e-12) -> "WBSDF":
        """Box-average rows over ``width`` meters (``None``: the whole table).

        Averaging over at least one structural period removes the oscillating
        cross terms, leaving a non-negative kernel for periodic structures.
        Values below ``zero_tol`` times the table peak are set to zero.
        """
        out = {}
        for lam, k in self._kernels.items():
            w = k.table
            v = w.values
            nrow = v.shape[0]
            span = nrow * w.dx
            if width is None or width >= span:
                nv = v.mean(axis=0, keepdims=True)
                nw = WignerTable(_snap(nv, zero_tol), span, w.du, w.x0, w.u0,
                                 meta={**w.meta, "boundary": "periodic", "prefilter": span})
            else:
                nb = max(1, int(round(width / w.dx)))
                if k.periodic:
                    c = np.cumsum(np.concatenate([v, v[:nb]]), axis=0)
                    c = np.concatenate([np.zeros((1, v.shape[1])), c])
                    nv = (c[nb:nb + nrow] - c[:nrow]) / nb
                    nv = np.roll(nv, nb // 2, axis=0)
                else:
                    pad = np.concatenate([np.zeros((nb // 2, v.shape[1])), v, np.zeros((nb, v.shape[1]))])
                    c = np.concatenate([np.zeros((1, v.shape[1])), np.cumsum(pad, axis=0)])
                    nv = (c[nb:nb + nrow] - c[:nrow]) / nb
                nw = WignerTable(_snap(nv, zero_tol), w.dx, w.du, w.x0, w.u0, meta={**w.meta, "prefilter": nb * w.dx})
            out[lam] = nw
        return WBSDF(out, self.mode)

    def adjoint(self) -> "WBSDF":
        """Kernel for tracing from the viewer toward the light.

        Reflection is symmetric in the two angles.  Transmission maps
        ``sin_o = sin_i + du lam``; the reverse map negates ``du``.
        """
        if self.mode == "reflective":
            return self
        out = {}
        for lam, k in self._kernels.items():
            w = k.table
            n = w.values.shape[1]
            idx = (n - np.arange(n)) % n
            if w.u0 != -(n // 2) * w.du or n % 2:
                raise DataError("adjoint needs a centred even frequency axis")
            out[lam] = WignerTable(w.values[:, idx], w.dx, w.du, w.x0, w.u0, meta=dict(w.meta))
        return WBSDF(out, self.mode)

    def delta_u(self, theta_i, theta_o, lam):
        return (self.sign * np.sin(theta_o) - np.sin(theta_i)) / lam

    def eval(self, x, theta_i, theta_o, lam):
        """Signed kernel value at ``(x, du_shift)``; bilinear, zero outside the table."""
        k = self._pick(lam)
        w = k.table
        v = w.values
        nrow, ncol = v.shape
        r, inside = self._row_coord(k, x)
        c = (self.delta_u(theta_i, theta_o, lam) - w.u0) / w.du
        r, c = np.broadcast_arrays(r, c)
        inside = np.broadcast_to(inside, r.shape)
        r0 = np.floor(r).astype(int)
        fr = r - r0
        r1 = (r0 + 1) % nrow if k.periodic else np.minimum(r0 + 1, nrow - 1)
        r0 = r0 % nrow
        c0 = np.floor(c).astype(int)
        fc = c - c0
        out = np.zeros(r.shape)
        for dc, wc in ((0, 1 - fc), (1, fc)):
            cc = c0 + dc
            ok = (cc >= 0) & (cc < ncol)
            ccs = np.clip(cc, 0, ncol - 1)
            val = (1 - fr) * v[r0, ccs] + fr * v[r1, ccs]
            out += np.where(ok, wc * val, 0.0)
        out = np.where(inside, out, 0.0)
        return out if out.ndim else float(out)

    def _row_index(self, k: _Kernel, x):
        r, inside = self._row_coord(k, x)
        nrow = k.table.values.shape[0]
        idx = np.rint(r).astype(int)
        idx = idx % nrow if k.periodic else np.clip(idx, 0, nrow - 1)
        return idx, inside

    def _stratum(self, k: _Kernel, sin_i, lam):
        """Column range [lo, hi) of propagating outgoing directions."""
        w = k.table
        ncol = w.values.shape[1]
        # |sin_i + du * lam| < 1  <=>  du in (-(1 + sin_i)/lam, (1 - sin_i)/lam)
        lo = np.ceil(((-1.0 - sin_i) / lam - w.u0) / w.du + 1e-9).astype(int)
        hi = np.floor(((1.0 - sin_i) / lam - w.u0) / w.du - 1e-9).astype(int) + 1
        return np.clip(lo, 0, ncol), np.clip(hi, 0, ncol)

    def evanescent_fraction(self, x, theta_i, lam) -> float:
        """Share of row |W| mass that maps to evanescent directions."""
        k = self._pick(lam)
        row, _ = self._row_index(k, x)
        lo, hi = self._stratum(k, np.sin(theta_i), lam)
        cdf = k.abs_cdf[row]
        total = cdf[-1]
        return float(1.0 - (cdf[hi] - cdf[lo]) / total) if total > 0 else 1.0

    def sample_many(self, x, sin_i, lam, draw, strategy: str = "importance"):
        """Vectorised sampler.

        Returns ``(sin_o, weight, pdf, valid)``.  ``weight`` is
        ``sign(W) * sum_prop |W| du`` so ``E[weight f] = sum_k W_k du f_k`` over
        propagating bins; ``valid`` is False where nothing propagates.
        ``strategy="uniform"`` picks propagating bins with equal probability
        instead (same expectation, used as a variance baseline).
        """
        if strategy == "uniform":
            return self._sample_uniform(x, sin_i, lam, draw)
        if strategy != "importance":
            raise ArgumentError(f"unknown strategy {strategy!r}")
        k = self._pick(lam)
        w = k.table
        x, sin_i, draw = np.broadcast_arrays(np.asarray(x, float), np.asarray(sin_i, float), np.asarray(draw, float))
        row, inside = self._row_index(k, x)
        lo, hi = self._stratum(k, sin_i, lam)
        cdf = k.abs_cdf
        c_lo = cdf[row, lo]
        c_hi = cdf[row, hi]
        mass = c_hi - c_lo
        valid = (mass > 0) & (hi > lo) & inside
        target = c_lo + draw * mass
        # smallest column j with cdf[j + 1] > target; ties go to the lower bin
        ncol = w.values.shape[1]
        col = np.empty(row.shape, dtype=int)
        flat_rows = row.ravel()
        flat_t = target.ravel()
        out = col.ravel()
        for r in np.unique(flat_rows):
            sel = flat_rows == r
            out[sel] = np.searchsorted(cdf[r, 1:], flat_t[sel], side="right")
        col = out.reshape(row.shape)
        col = np.clip(col, lo, np.maximum(hi - 1, lo))
        col = np.minimum(col, ncol - 1)
        val = w.values[row, col]
        absval = np.abs(val)
        pdf = np.where(valid, absval / np.where(mass > 0, mass, 1.0), 0.0)
        weight = np.where(valid, np.sign(val) * mass * w.du, 0.0)
        u_shift = w.u0 + col * w.du
        sin_o = self.sign * (sin_i + u_shift * lam)
        return sin_o, weight, pdf, valid

    def _sample_uniform(self, x, sin_i, lam, draw):
        k = self._pick(lam)
        w = k.table
        x, sin_i, draw = np.broadcast_arrays(np.asarray(x, float), np.asarray(sin_i, float), np.asarray(draw, float))
        row, inside = self._row_index(k, x)
        lo, hi = self._stratum(k, sin_i, lam)
        nb = hi - lo
        valid = (nb > 0) & inside
        col = np.minimum(lo + np.floor(draw * nb).astype(int), np.maximum(hi - 1, lo))
        col = np.minimum(col, w.values.shape[1] - 1)
        val = w.values[row, col]
        pdf = np.where(valid, 1.0 / np.maximum(nb, 1), 0.0)
        weight = np.where(valid, val * w.du * nb, 0.0)
        sin_o = self.sign * (sin_i + (w.u0 + col * w.du) * lam)
        return sin_o, weight, pdf, valid

    def sample(self, x, theta_i, lam, draw):
        """Draw one outgoing angle. Returns ``(theta_o, weight, pdf)``."""
        sin_o, weight, pdf, valid = self.sample_many(x, np.sin(theta_i), lam, draw)
        if not bool(valid):
            raise SamplingError("no propagating bin at this incidence")
        return float(np.arcsin(np.clip(sin_o, -1, 1))), float(weight), float(pdf)


def _snap(v, tol):
    peak = np.max(np.abs(v))
    return np.where(np.abs(v) < tol * peak, 0.0, v)


def stam_far_field(b: WBSDF, theta_1, theta_2, lam):
    """x-integrated kernel: the single-bounce far-field intensity for a plane wave at ``theta_1``."""
    w = b.table(lam)
    xs = w.x
    vals = np.stack([np.asarray(b.eval(xi, theta_1, theta_2, lam)) for xi in xs])
    return vals.sum(axis=0) * w.dx


# statistical surfaces -----------------------------------------------------

@dataclass(frozen=True)
class StatisticalSurfaceSpec:
    """Gaussian height statistics: ``sigma_h`` and normalised correlation ``rho_h``.

    ``rho`` maps lag (meters) to ``R_h(lag) / sigma_h**2``.
    """

    sigma_h: float
    rho: Callable[[np.ndarray], np.ndarray]
    a: Optional[float] = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.sigma_h >= 0 and np.isfinite(self.sigma_h)):
            raise ArgumentError("sigma_h must be >= 0")

    def R_h(self, lags):
        return self.sigma_h**2 * self.rho(np.asarray(lags, dtype=float))

    @classmethod
    def gaussian(cls, sigma_h: float, corr_len: float):
        return cls(sigma_h, lambda x: np.exp(-(x / corr_len) ** 2), info={"model": "gaussian", "corr_len": corr_len})

    @classmethod
    def from_samples(cls, R: np.ndarray, dx: float):
        """Sampled autocorrelation ``R[k]`` at lag ``k * dx`` (lags beyond the data give 0)."""
        R = np.asarray(R, dtype=float)
        if R[0] <= 0:
            return cls(0.0, lambda x: np.ones_like(x), info={"model": "sampled"})
        rho_s = R / R[0]
        if np.any(np.abs(rho_s) > 1 + 1e-9):
            raise DataError("autocorrelation exceeds its zero-lag value")
        lag = dx * np.arange(len(R))

        def rho(x):
            return np.interp(np.abs(x), lag, rho_s, right=0.0)

        return cls(float(np.sqrt(R[0])), rho, info={"model": "sampled"})

    @classmethod
    def quartic(cls, sigma_h: float, a: float, n: int, dx: float):
        """Quartic local model ``rho_h = 1 - (x/a)^4``, truncated to a valid covariance.

        The quartic is used as a local expansion: it is cut to ``|x| <= a``,
        taken onto the periodic ``n``-sample lag lattice, and its
        spectrum is cut to its central positive lobe so that Gaussian surfaces
        with this covariance exist.  Both the closed-form WBSDF and the Monte-Carlo
        oracle use the truncated correlation.
        """
        m = np.arange(n)
        lag = dx * np.where(m < n // 2, m, m - n)
        raw = np.clip(1.0 - (lag / a) ** 4, 0.0, None)
        S = np.fft.fft(raw).real
        # keep the central spectral lobe up to its first non-positive bin;
        # clipping only the negative bins would leave high-frequency sidelobes
        # that roughen the surface at small lags
        kk = np.abs(np.where(m < n // 2, m, m - n))
        nonpos = kk[S <= 0]
        cut = nonpos.min() if nonpos.size else n // 2 + 1
        keep = kk < cut
        removed = np.abs(S[~keep]).sum() / np.abs(S).sum()
        S = np.where(keep, S, 0.0)
        r = np.fft.ifft(S).real
        r /= r[0]
        period = n * dx

        def rho(x):
            x = np.asarray(x, dtype=float)
            pos = np.mod(x, period) / dx
            i0 = np.floor(pos).astype(int) % n
            f = pos - np.floor(pos)
            return (1 - f) * r[i0] + f * r[(i0 + 1) % n]

        return cls(sigma_h, rho, a=a,
                   info={"model": "quartic", "a": a, "n": n, "dx": dx, "removed_negative_fraction": float(removed)})


def phase_variance(sigma_h: float, theta_i: float, lam: float) -> float:
    """``[2 pi sigma (1 + cos theta_i)]^2`` with ``sigma = sigma_h / lam``."""
    return (2 * np.pi * (sigma_h / lam) * (1 + np.cos(theta_i))) ** 2


def correlation_function(spec: StatisticalSurfaceSpec, lags, theta_i: float, lam: float) -> np.ndarray:
    """``gamma(x') = exp(i k_i x') exp(-sigma_alpha^2 [1 - rho_h(x')])``, evaluated in log space."""
    lags = np.asarray(lags, dtype=float)
    s2 = phase_variance(spec.sigma_h, theta_i, lam)
    logmag = -s2 * (1.0 - spec.rho(lags)) if s2 > 0 else np.zeros_like(lags)
    if np.any(logmag > 700):
        raise PrecisionError("correlation function overflows")
    return np.exp(logmag + 2j * np.pi * np.sin(theta_i) / lam * lags)


def statistical_wbsdf(spec: StatisticalSurfaceSpec, theta_i: float, lam: float, n: int, dx: float) -> WignerTable:
    """x-invariant WBSDF of a Gaussian rough surface (single-row table).

    The correlation function is transformed on the periodic ``n``-sample lag
    lattice, so the row is exactly the expected far-field intensity per unit
    length of a periodic stationary surface with the same statistics.
    """
    if n < 2 or n & (n - 1):
        raise ArgumentError("n must be a power of two")
    m = np.arange(n)
    lags = dx * np.where(m < n // 2, m, m - n)
    gamma = correlation_function(spec, lags, theta_i, lam)
    # the unpaired -n/2 lag is the only term that can break Hermitian symmetry
    gamma[n // 2] = gamma[n // 2].real
    W = dx * np.fft.fft(gamma)
    du = 1.0 / (n * dx)
    row = np.fft.fftshift(W.real)[None, :]
    return WignerTable(row, n * dx, du, -0.5 * n * dx, -(n // 2) * du,
                       meta={"boundary": "periodic", "sigma_alpha2": phase_variance(spec.sigma_h, theta_i, lam)})


def lobe_fwhm(u: np.ndarray, profile: np.ndarray) -> float:
    """Full width at half maximum of the main lobe (linear interpolation at the crossings)."""
    i = int(np.argmax(profile))
    half = 0.5 * profile[i]
    j = i
    while j > 0 and profile[j] > half:
        j -= 1
    k = i
    while k < len(profile) - 1 and profile[k] > half:
        k += 1

    def cross(a, b):
        pa, pb = profile[a], profile[b]
        return u[a] + (half - pa) * (u[b] - u[a]) / (pb - pa) if pb != pa else u[a]

    return float(cross(k - 1, k) - cross(j, j + 1))

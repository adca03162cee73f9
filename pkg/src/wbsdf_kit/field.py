"""Complex field grids and discrete Wigner distributions.

Conventions used throughout the package:

* A ``ComplexGrid`` holds samples ``t[n]`` at ``x = x0 + n * dx``.
* Forward transforms carry the ``dx`` factor, ``T(u) = dx * sum_n t[n] exp(-2j pi u x_n)``,
  so table values approximate the continuous integrals.
* The discrete WDF is the Wigner distribution of the band-limited periodic
  interpolant of the samples.  Half-sample shifts ``x'/2`` are evaluated on the
  even-index sublattice of a 2x trigonometric interpolation, which makes both
  marginals exact.  Terms that fall halfway between two frequency bins are
  shared equally by the two neighbours.
* ``boundary="zero"`` (the default) embeds the patch in an opaque surround of
  equal length before transforming; ``boundary="periodic"`` treats the patch as
  one period of an infinite structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .errors import ArgumentError, DataError, InternalConsistencyError, PrecisionError

REALNESS_TOL = 1e-10


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ComplexGrid:
    """Uniformly sampled complex transmittance ``t(x)`` or ``t(x, y)``.

    2D grids use the same spacing and origin along both axes.
    """

    samples: np.ndarray
    dx: float
    x0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim not in (1, 2):
            raise ArgumentError("samples must be 1D or 2D")
        for n in s.shape:
            if not _is_pow2(n):
                raise ArgumentError(f"grid size {n} is not a power of two >= 2")
        if not (np.isfinite(self.dx) and self.dx > 0):
            raise ArgumentError("dx must be positive")
        if not np.all(np.isfinite(s)):
            raise DataError("grid contains non-finite samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(u, T(u))`` in centred order."""
        T = self.dx * np.fft.fftshift(np.fft.fft(self.samples))
        u = np.fft.fftshift(np.fft.fftfreq(self.n, self.dx))
        return u, T


@dataclass(frozen=True)
class WignerTable:
    """Real signed table ``W[x_index, u_index]`` with centred frequency axis."""

    values: np.ndarray
    dx: float
    du: float
    x0: float = 0.0
    u0: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ArgumentError("table values must be 2D")
        if not np.all(np.isfinite(v)):
            raise DataError("table contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.shape[0])

    @property
    def u(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.values.shape[1])

    def to_csv(self, path) -> None:
        """Header ``x_meters,u_cycles_per_meter,value``; one line per cell, x outer, u inner."""
        u = self.u
        cols = len(u)
        line = "%.17g,%.17g,%.17g\n" * cols
        block = np.empty((cols, 3))
        block[:, 1] = u
        with open(path, "w") as fh:
            fh.write("x_meters,u_cycles_per_meter,value\n")
            for xi, row in zip(self.x, self.values):
                block[:, 0] = xi
                block[:, 2] = row
                fh.write(line % tuple(block.ravel()))


def spatial_frequency(theta, lam):
    """``u = sin(theta) / lambda``."""
    return np.sin(theta) / lam


def is_propagating(u, lam):
    return np.abs(np.asarray(u) * lam) <= 1.0


def _prepared(t: ComplexGrid, boundary: str) -> np.ndarray:
    if t.samples.ndim != 1:
        raise ArgumentError("expected a 1D grid")
    if boundary == "periodic":
        return t.samples
    if boundary == "zero":
        return np.concatenate([t.samples, np.zeros_like(t.samples)])
    raise ArgumentError(f"unknown boundary {boundary!r}")


def _interp2(s: np.ndarray) -> np.ndarray:
    """2x trigonometric interpolation (Nyquist bin kept on the negative side)."""
    m = len(s)
    S = np.fft.fft(s)
    S2 = np.zeros(2 * m, dtype=complex)
    S2[: m // 2] = S[: m // 2]
    S2[-(m // 2):] = S[m // 2:]
    return 2.0 * np.fft.ifft(S2)


def mutual_intensity(t: ComplexGrid, x_index: int, boundary: str = "zero") -> tuple[np.ndarray, np.ndarray]:
    """``J(x, x') = t(x + x'/2) conj(t(x - x'/2))`` on the sample lattice.

    Returns ``(shifts, J)`` with ``shifts = 2 k dx`` for ``k = -(N-1)..N-1``.
    Outside the patch ``t`` is zero (or wraps, for ``boundary="periodic"``).
    """
    n = t.n
    if not 0 <= x_index < n:
        raise ArgumentError(f"x_index {x_index} outside [0, {n})")
    k = np.arange(-(n - 1), n)
    a, b = x_index + k, x_index - k
    s = t.samples
    if boundary == "periodic":
        J = s[a % n] * np.conj(s[b % n])
    elif boundary == "zero":
        ok = (a >= 0) & (a < n) & (b >= 0) & (b < n)
        J = np.zeros(len(k), dtype=complex)
        J[ok] = s[a[ok]] * np.conj(s[b[ok]])
    else:
        raise ArgumentError(f"unknown boundary {boundary!r}")
    return 2 * k * t.dx, J


def _fine_wdf(s: np.ndarray, dx: float) -> np.ndarray:
    # rows: original samples; columns: u = j / (2 M dx), FFT order
    m = len(s)
    s2 = _interp2(s)
    rows = 2 * np.arange(m)[:, None]
    lags = np.arange(2 * m)[None, :]
    K = s2[(rows + lags) % (2 * m)] * np.conj(s2[(rows - lags) % (2 * m)])
    W2 = dx * np.fft.fft(K, axis=1)
    scale = np.max(np.abs(W2)) if W2.size else 0.0
    resid = np.max(np.abs(W2.imag)) if W2.size else 0.0
    if scale > 0 and resid > REALNESS_TOL * scale:
        raise InternalConsistencyError(f"imaginary residue {resid:.3e} exceeds tolerance")
    return W2.real


def _coarsen(W2: np.ndarray) -> np.ndarray:
    even = W2[:, 0::2]
    odd = W2[:, 1::2]
    return 0.5 * even + 0.25 * (odd + np.roll(odd, 1, axis=1))


def wdf_1d(t: ComplexGrid, boundary: str = "zero") -> WignerTable:
    """Discrete Wigner distribution of a 1D grid.

    The returned table has one row per (possibly zero-padded) sample and the
    same number of frequency bins, ``du = 1 / (rows * dx)``.  It satisfies
    ``sum_u W du = |t(x)|^2`` and ``sum_x W dx = |T(u)|^2`` to roundoff.
    """
    s = _prepared(t, boundary)
    m = len(s)
    W = np.fft.fftshift(_coarsen(_fine_wdf(s, t.dx)), axes=1)
    du = 1.0 / (m * t.dx)
    return WignerTable(W, t.dx, du, t.x0, -(m // 2) * du, meta={"boundary": boundary})


def wdf_2d_separable(t: ComplexGrid, boundary: str = "zero", tol: float = 1e-6) -> tuple[WignerTable, WignerTable]:
    """WDF of a separable 2D field ``t(x, y) = t1(x) t2(y)``.

    The full 4D table is the outer product of the two returned tables.
    Non-separable fields (a circular aperture, say) raise ``DataError``; use
    direct 2D propagation from :mod:`wbsdf_kit.oracle` for those.
    """
    s = t.samples
    if s.ndim != 2:
        raise ArgumentError("expected a 2D grid")
    U, sv, Vh = np.linalg.svd(s)
    norm = np.linalg.norm(s)
    if norm == 0:
        raise DataError("all-zero field")
    recon = sv[0] * np.outer(U[:, 0], Vh[0])
    err = np.linalg.norm(s - recon) / norm
    if err > tol:
        raise DataError(f"field is not separable (relative rank-1 error {err:.2e})")
    r = np.sqrt(sv[0])
    # fix the arbitrary SVD phase so a real positive field gives real positive factors
    k = np.argmax(np.abs(U[:, 0]))
    ph = U[k, 0] / abs(U[k, 0])
    f1 = r * U[:, 0] / ph
    f2 = r * Vh[0] * ph
    return (
        wdf_1d(ComplexGrid(f1, t.dx, t.x0), boundary),
        wdf_1d(ComplexGrid(f2, t.dx, t.x0), boundary),
    )


def bessel_orders(half_m: float, q_max: int, threshold: float = 1e-9) -> np.ndarray:
    """``J_q(m/2)`` for ``q = -q_max..q_max``; checks the truncated energy."""
    q = np.arange(-q_max, q_max + 1)
    c = jv(q, half_m)
    if np.sum(c**2) < 1.0 - threshold:
        raise PrecisionError(f"q_max={q_max} too small for m/2={half_m}")
    return c


def grating_wdf_closed_form(
    m: float,
    p: float,
    q_max: int,
    n: int,
    dx: float,
    x0: float = 0.0,
    fold: bool = True,
) -> WignerTable:
    """Bessel double series for the WDF of ``exp(i (m/2) sin(2 pi x / p))``.

    Evaluated on the rows/bins of a periodic ``n``-sample table.  Each delta
    ``delta(u - (q1+q2)/(2p))`` becomes ``1/du`` in its bin; a delta exactly
    halfway between bins is shared by both.  With ``fold=True`` orders beyond
    the grid Nyquist limit are folded back the way sampling folds them, which
    requires an integer number of periods in the patch.
    """
    if p <= 0:
        raise ArgumentError("pitch must be positive")
    if q_max < 1:
        raise ArgumentError("q_max must be >= 1")
    if not _is_pow2(n):
        raise ArgumentError("n must be a power of two")
    coef = bessel_orders(m / 2.0, q_max)
    q = np.arange(-q_max, q_max + 1)
    L = n * dx
    du = 1.0 / L
    x = x0 + dx * np.arange(n)

    if fold:
        periods = L / p
        if abs(periods - round(periods)) > 1e-9:
            raise ArgumentError("fold=True needs an integer number of periods in the patch")
        Q = q * int(round(periods))
        Q = (Q + n // 2) % n - n // 2
        freq = Q / L
    else:
        freq = q / p

    W = np.zeros((n, n), dtype=complex)
    for i1 in range(len(q)):
        for i2 in range(len(q)):
            w = coef[i1] * coef[i2]
            if w == 0.0:
                continue
            col = w * np.exp(2j * np.pi * x * (freq[i1] - freq[i2])) / du
            b = 0.5 * (freq[i1] + freq[i2]) / du + n // 2
            lo = np.floor(b + 1e-9)
            frac = b - lo
            if abs(frac) < 1e-9:
                parts = [(int(lo), 1.0)]
            elif abs(frac - 0.5) < 1e-9:
                parts = [(int(lo), 0.5), (int(lo) + 1, 0.5)]
            else:
                parts = [(int(round(b)), 1.0)]
            for k, share in parts:
                if fold:
                    k %= n
                elif not 0 <= k < n:
                    continue
                W[:, k] += share * col
    scale = np.max(np.abs(W))
    if scale > 0 and np.max(np.abs(W.imag)) > REALNESS_TOL * scale * 1e3:
        raise InternalConsistencyError("closed-form table is not real")
    return WignerTable(W.real, dx, du, x0, -(n // 2) * du, meta={"boundary": "periodic"})


def marginals(w: WignerTable) -> tuple[np.ndarray, np.ndarray]:
    """``(intensity over x, spectrum over u)``."""
    return w.values.sum(axis=1) * w.du, w.values.sum(axis=0) * w.dx

"""Diffraction orders of a sinusoidal phase grating, read off its Wigner table.

Integrating the table over one period gives the far-field order energies,
which should match squared Bessel functions of the phase amplitude.

    python3 demos/grating_orders.py
"""
import numpy as np
from scipy.special import jv

from wbsdf_kit.field import wdf_1d
from wbsdf_kit.microstructure import GridSpec, Microstructure, realize

pitch = 2e-6
grid = GridSpec(256, pitch / 32)  # 8 periods, 32 samples each

for m in (1.0, 2.0, 4.0):
    t = realize(Microstructure.sinusoidal_grating(pitch, m=m), 550e-9, 0.0, grid)
    w = wdf_1d(t, "periodic")
    energy = w.values.sum(axis=0) * w.dx * w.du / (grid.n * grid.dx)
    k0 = int(round(-w.u0 / w.du))
    step = int(round(1 / pitch / w.du))
    print(f"m = {m}")
    for q in range(4):
        print(f"  order {q}: table {energy[k0 + q * step]:.6f}   J_{q}(m/2)^2 {jv(q, m / 2) ** 2:.6f}")

"""Depth-dependent lens blur of a synthetic test chart.

A checkerboard recedes from 1 m (left) to 4 m (right) in front of a
50 mm f/8 lens focused at 2 m; the blurred chart and the kernel stack
are written next to each other.

    python3 demos/depth_blur.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from wbsdf_kit.io import write_pfm, write_psf_bundle, write_ppm
from wbsdf_kit.psf import LensSpec, apply_psf, build_stack, depth_planes

out = Path(sys.argv[1] if len(sys.argv) > 1 else "depth_blur_out")
out.mkdir(parents=True, exist_ok=True)

lens = LensSpec(0.05, 8.0, 2.0)
lams = (450e-9, 550e-9, 650e-9)
stack = build_stack(lens, depth_planes(1.0, 4.0, 7), [0.0], lams, kernel_size=151, pitch=1.4e-6, threads=4)
for d in stack.depths:
    print(f"depth {d:5.2f} m: geometric blur {lens.blur_diameter(d) / stack.pitch:6.2f} px")

h, w = 128, 384
yy, xx = np.indices((h, w))
chart = (((xx // 24) + (yy // 24)) % 2).astype(float)
image = np.repeat(chart[..., None], 3, axis=2)
depth = np.broadcast_to(np.geomspace(1.0, 4.0, w), (h, w))
blurred = apply_psf(image, stack, depth)

write_ppm(out / "chart.ppm", image, exposure=1.0)
write_ppm(out / "blurred.ppm", blurred[..., ::-1], exposure=1.0)  # bins are blue..red, PPM wants RGB
write_pfm(out / "blurred.pfm", blurred[..., ::-1])
write_psf_bundle(out / "psf_bundle", stack)
print(f"wrote {out}")

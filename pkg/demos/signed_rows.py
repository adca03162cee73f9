"""Per-position WBSDF rows are signed; averaging over a footprint removes the negatives.

Prints how negative the table gets for a binary grating as the averaging
footprint widens, then renders a small grating scene both ways and shows
that the image means agree while only the per-position version draws
negative samples.

    python3 demos/signed_rows.py
"""
import json

import numpy as np

from wbsdf_kit.checks import scene_path
from wbsdf_kit.microstructure import GridSpec, Microstructure
from wbsdf_kit.render import render
from wbsdf_kit.scene import scene_from_dict
from wbsdf_kit.wbsdf import WBSDF

lam = 532e-9
b = WBSDF.from_microstructure(Microstructure.binary_phase_grating(1.33e-7, 2e-6), [lam],
                              GridSpec(256, 6.25e-8), "periodic")
for label, table in [("per position", b), ("2 periods", b.prefiltered(4e-6)),
                     ("4 periods", b.prefiltered(8e-6)), ("whole patch", b.prefiltered())]:
    v = table.table(lam).values
    print(f"{label:>13}: min/max = {v.min() / v.max():+.4f}")

doc = json.loads(scene_path("grating_strip").read_text())
doc["camera"].update(width=32, height=32, pixel_pitch=1.25e-3)
for fp in ("patch", 0):
    doc["tables"]["grating"]["footprint"] = fp
    im = render(scene_from_dict(doc), spp=256, seed=1)
    s = im.spectral()[0]
    err = np.sqrt(im.variance[0].sum()) / s.size
    print(f"footprint {fp!s:>5}: mean {s.mean():.5f} +- {err:.5f}, "
          f"negative samples {im.stats['negative_samples']}, min pixel {s.min():+.4f}")

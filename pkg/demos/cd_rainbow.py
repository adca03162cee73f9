"""Render the CD-on-a-wall scene and write a PPM preview plus per-bin PFMs.

    python3 demos/cd_rainbow.py [out_dir] [spp]
"""
import sys
from pathlib import Path

from wbsdf_kit.checks import scene_path
from wbsdf_kit.io import write_pfm, write_ppm
from wbsdf_kit.render import render
from wbsdf_kit.scene import load_scene

out = Path(sys.argv[1] if len(sys.argv) > 1 else "cd_rainbow_out")
spp = int(sys.argv[2]) if len(sys.argv) > 2 else 256
out.mkdir(parents=True, exist_ok=True)

scene, settings = load_scene(scene_path("cd_on_wall"))
im = render(scene, spp=spp, seed=settings.get("seed", 0))
spectral, report = im.finalize()
write_ppm(out / "cd_on_wall.ppm", im.rgb())
for b, lam in enumerate(scene.wavelengths):
    write_pfm(out / f"bin_{lam * 1e9:.0f}nm.pfm", spectral[b])
print(f"{spp} spp in {im.stats['seconds']:.1f} s, min before clamp {report['min_before_clamp']:.3e}")
print(f"wrote {out / 'cd_on_wall.ppm'}")

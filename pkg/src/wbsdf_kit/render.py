"""Signed-radiance path tracer over rectangle scenes.

Rays leave a thin-lens camera and are traced toward the lights.  Diffuse
vertices use next-event estimation to every light plus a direction drawn from
a mixture of cosine sampling and uniform-area sampling of the specular
(mirror and WBSDF) patches; the mixture pdf is evaluated exactly, so the
estimator stays unbiased.  WBSDF vertices draw a frequency bin in proportion
to ``|W|`` and multiply the throughput by the signed weight.  Negative path
contributions are accumulated as they are; clamping happens only when an
image is finalised, after the non-negativity check.

Every pixel owns a counter-based random stream keyed by ``(seed, bin,
pixel)``, so images do not depend on how pixels are split across threads.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, SceneError
from .scene import AreaLight, PointLight, Scene

KIND_DIFFUSE, KIND_MIRROR, KIND_WBSDF, KIND_LIGHT = 0, 1, 2, 3
_BIG = np.inf
_SAMPLES_PER_CHUNK = 1 << 18
RR_DEPTH = 3
NEGATIVE_TOL = 1e-6


def default_threads() -> int:
    env = os.environ.get("WBSDF_KIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ArgumentError(f"WBSDF_KIT_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ArgumentError("WBSDF_KIT_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _per_bin(val, nbins, what):
    a = np.atleast_1d(np.asarray(val, dtype=float))
    if a.size == 1:
        a = np.repeat(a, nbins)
    if a.size != nbins:
        raise SceneError(f"{what} has {a.size} values for {nbins} spectral bins")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise SceneError(f"{what} must be finite and non-negative")
    return a


def _frame(n):
    h = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, h)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


class _Compiled:
    """Flat arrays for all rectangles (patches first, then area lights)."""

    def __init__(self, scene: Scene):
        scene.validate()
        self.scene = scene
        nb = len(scene.wavelengths)
        rects, kinds, albedo = [], [], []
        self.wbsdf = {}
        for i, p in enumerate(scene.patches):
            rects.append(p.rect)
            m = p.material
            kinds.append({"diffuse": KIND_DIFFUSE, "mirror": KIND_MIRROR, "wbsdf": KIND_WBSDF}[m.type])
            albedo.append(m.albedo if m.type == "diffuse" else 1.0)
            if m.type == "wbsdf":
                b = scene.tables[m.table]
                eu, ev = p.rect.edge_u, p.rect.edge_v
                ax, ot = (eu, ev) if m.axis == "u" else (ev, eu)
                self.wbsdf[i] = {
                    "kernel": b.adjoint(),
                    "a": ax / np.linalg.norm(ax),
                    "b": ot / np.linalg.norm(ot),
                    "length": float(np.linalg.norm(ax)),
                    "axis": m.axis,
                }
        self.groups = scene.groups
        gidx = {g: j for j, g in enumerate(self.groups)}
        self.lights = []
        for l in scene.lights:
            rec = {"group": gidx[l.coherence_group]}
            if isinstance(l, AreaLight):
                rec.update(kind="area", rect_index=len(rects), le=_per_bin(l.radiance, nb, "radiance"),
                           c=l.rect.corner, eu=l.rect.edge_u, ev=l.rect.edge_v, n=l.rect.normal, area=l.rect.area)
                rects.append(l.rect)
                kinds.append(KIND_LIGHT)
                albedo.append(0.0)
            elif isinstance(l, PointLight):
                rec.update(kind="point", rect_index=-1, intensity=_per_bin(l.intensity, nb, "intensity"),
                           pos=l.position)
            else:
                raise SceneError("unknown light")
            self.lights.append(rec)
        self.light_of_rect = {rec["rect_index"]: j for j, rec in enumerate(self.lights) if rec["kind"] == "area"}
        self.C = np.array([r.corner for r in rects]).reshape(-1, 3)
        self.EU = np.array([r.edge_u for r in rects]).reshape(-1, 3)
        self.EV = np.array([r.edge_v for r in rects]).reshape(-1, 3)
        self.N = np.array([r.normal for r in rects]).reshape(-1, 3)
        self.CN = np.einsum("ij,ij->i", self.C, self.N)
        self.CU = np.einsum("ij,ij->i", self.C, self.EU)
        self.CV = np.einsum("ij,ij->i", self.C, self.EV)
        self.LU2 = np.einsum("ij,ij->i", self.EU, self.EU)
        self.LV2 = np.einsum("ij,ij->i", self.EV, self.EV)
        self.area = np.sqrt(self.LU2 * self.LV2)
        self.kind = np.array(kinds, dtype=int)
        self.albedo = np.array(albedo)
        frames = [_frame(n) for n in self.N]
        self.T1 = np.array([f[0] for f in frames]).reshape(-1, 3)
        self.T2 = np.array([f[1] for f in frames]).reshape(-1, 3)
        self.specular = np.flatnonzero((self.kind == KIND_MIRROR) | (self.kind == KIND_WBSDF))
        self.dims_per_bounce = 5 + 2 * len(self.lights)
        self.n_dims = 4 + scene.max_depth * self.dims_per_bounce
        self.light_index = np.full(len(rects), -1)
        for r, j in self.light_of_rect.items():
            self.light_index[r] = j
        self.light_group = np.array([rec["group"] for rec in self.lights], dtype=int)
        # radiance per light and bin (point lights are never hit by rays)
        self.light_le = np.array([rec["le"] if rec["kind"] == "area" else np.zeros(nb)
                                  for rec in self.lights]).reshape(len(self.lights), nb)

    # geometry -----------------------------------------------------------
    def _hit_rect(self, k, o, d):
        den = d @ self.N[k]
        oc = self.CN[k] - o @ self.N[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = oc / den
        a = (o @ self.EU[k] - self.CU[k] + t * (d @ self.EU[k])) / self.LU2[k]
        b = (o @ self.EV[k] - self.CV[k] + t * (d @ self.EV[k])) / self.LV2[k]
        miss = ~((t > 0) & (a >= 0) & (a <= 1) & (b >= 0) & (b <= 1))
        t[miss] = _BIG
        return t, a, b

    def intersect(self, o, d, skip):
        n = len(o)
        best = np.full(n, _BIG)
        kk = np.full(n, -1)
        ua = np.zeros(n)
        vb = np.zeros(n)
        for k in range(len(self.C)):
            t, a, b = self._hit_rect(k, o, d)
            upd = (t < best) & (skip != k)
            best[upd] = t[upd]
            kk[upd] = k
            ua[upd] = a[upd]
            vb[upd] = b[upd]
        return best, kk, ua, vb

    def occluded(self, o, seg, skip_a, skip_b):
        """True where something blocks the open segment ``o -> o + seg``."""
        blocked = np.zeros(len(o), dtype=bool)
        for k in range(len(self.C)):
            t, _, _ = self._hit_rect(k, o, seg)
            blocked |= (t < 1.0 - 1e-9) & (skip_a != k) & (skip_b != k)
        return blocked


@dataclass
class Image:
    """Signed per-group spectral radiance plus estimator diagnostics."""

    signed: np.ndarray  # (groups, bins, height, width)
    wavelengths: tuple
    groups: list
    variance: np.ndarray  # (bins, height, width): variance of each pixel estimate
    spp: int
    stats: dict = field(default_factory=dict)

    def spectral(self) -> np.ndarray:
        out = np.zeros(self.signed.shape[1:])
        for g in range(self.signed.shape[0]):
            out = out + self.signed[g]
        return out

    def check_nonnegative(self, tol: float = NEGATIVE_TOL) -> dict:
        s = self.spectral()
        peak = float(s.max()) if s.size else 0.0
        lo = float(s.min()) if s.size else 0.0
        limit = -tol * max(peak, 0.0)
        return {"min_before_clamp": lo, "max": peak, "limit": limit,
                "ok": lo >= limit, "negative_pixels": int(np.sum(s < limit))}

    def finalize(self, tol: float = NEGATIVE_TOL):
        """Clamped spectral image and the non-negativity report."""
        rep = self.check_nonnegative(tol)
        return np.clip(self.spectral(), 0.0, None), rep

    def rgb(self) -> np.ndarray:
        img, _ = self.finalize()
        return spectral_to_rgb(img, self.wavelengths)


def spectral_to_rgb(img: np.ndarray, wavelengths) -> np.ndarray:
    """Box conversion: bins below 490 nm feed blue, 490-580 nm green, above red.

    A single bin is shown as grey.  Returns ``(height, width, 3)``.
    """
    lams = np.asarray(wavelengths)
    if len(lams) == 1:
        return np.repeat(img[0][..., None], 3, axis=2)
    chans = [lams > 580e-9, (lams >= 490e-9) & (lams <= 580e-9), lams < 490e-9]
    out = np.zeros(img.shape[1:] + (3,))
    for c, sel in enumerate(chans):
        if np.any(sel):
            out[..., c] = img[sel].mean(axis=0)
    return out


def incoherent_sum(images) -> Image:
    """Per-bin sum of images rendered with disjoint coherence groups."""
    images = list(images)
    if not images:
        raise ArgumentError("nothing to sum")
    ref = images[0]
    total = np.zeros(ref.signed.shape[1:])
    var = np.zeros_like(ref.variance)
    for im in images:
        if im.signed.shape[1:] != ref.signed.shape[1:] or tuple(im.wavelengths) != tuple(ref.wavelengths):
            raise ArgumentError("images differ in size or spectral bins")
        total = total + im.spectral()
        var = var + im.variance
    return Image(total[None], ref.wavelengths, ["sum"], var, ref.spp, {"summed": len(images)})


# sampling helpers ---------------------------------------------------------

def _concentric(u1, u2):
    a = 2 * u1 - 1
    b = 2 * u2 - 1
    r = np.where(np.abs(a) > np.abs(b), a, b)
    phi = np.where(np.abs(a) > np.abs(b), (np.pi / 4) * b / np.where(a == 0, 1, a),
                   np.pi / 2 - (np.pi / 4) * a / np.where(b == 0, 1, b))
    zero = (a == 0) & (b == 0)
    return np.where(zero, 0.0, r * np.cos(phi)), np.where(zero, 0.0, r * np.sin(phi))


def _pixel_uniforms(seed, bin_index, pixels, spp, dims):
    out = np.empty((len(pixels), spp, dims))
    for i, p in enumerate(pixels):
        key = (int(seed) << 64) | (int(bin_index) << 40) | int(p)
        out[i] = np.random.Generator(np.random.Philox(key=key)).random((spp, dims))
    return out


def _camera_rays(cam, pixels, spp, U):
    f, r, up = cam.frame()
    m = int(round(np.sqrt(spp)))
    jx, jy = U[..., 0], U[..., 1]
    if m * m == spp:
        k = np.arange(spp)
        jx = (k % m + jx) / m
        jy = (k // m + jy) / m
    px = (pixels % cam.width)[:, None]
    py = (pixels // cam.width)[:, None]
    fx = (px + jx - 0.5 * cam.width) * cam.pixel_pitch
    fy = (0.5 * cam.height - py - jy) * cam.pixel_pitch
    mag = cam.focus_distance / cam.film_distance
    target = (cam.position + cam.focus_distance * f
              + (fx * mag)[..., None] * r + (fy * mag)[..., None] * up)
    lx, ly = _concentric(U[..., 2], U[..., 3])
    lx, ly = lx * cam.aperture_radius, ly * cam.aperture_radius
    o = cam.position + lx[..., None] * r + ly[..., None] * up
    d = target - o
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return o.reshape(-1, 3), d.reshape(-1, 3)


# core ----------------------------------------------------------------------

def _trace_chunk(cs: _Compiled, pixels, spp, bin_index, seed, strategy, group_mask):
    scene = cs.scene
    lam = scene.wavelengths[bin_index]
    n_groups = len(cs.groups)
    U = _pixel_uniforms(seed, bin_index, pixels, spp, cs.n_dims)
    o, d = _camera_rays(scene.camera, pixels, spp, U)
    U = U.reshape(-1, cs.n_dims)
    n = len(o)
    contrib = np.zeros((n_groups, n))
    sid = np.arange(n)
    thr = np.ones(n)
    last = np.full(n, -1)
    spec = np.ones(n, dtype=bool)
    st = {"paraxial_rejected": 0, "evanescent": 0, "negative_samples": 0, "rays": 0,
          "paraxial_rejected_energy": 0.0, "wbsdf_energy": 0.0}
    cos_lim = np.cos(scene.paraxial_limit)

    def emit(gidx, ids, val):
        for g in np.unique(gidx):
            if group_mask[g]:
                sel = gidx == g
                contrib[g, ids[sel]] += val[sel]

    for depth in range(scene.max_depth):
        if len(sid) == 0:
            break
        st["rays"] += len(sid)
        base = 4 + depth * cs.dims_per_bounce
        u = U[sid, base:base + cs.dims_per_bounce]
        t, k, ha, hb = cs.intersect(o, d, last)
        alive = k >= 0
        kind = np.where(alive, cs.kind[np.maximum(k, 0)], -1)

        # emitters
        lit = kind == KIND_LIGHT
        if np.any(lit):
            kl = k[lit]
            front = np.einsum("ij,ij->i", d[lit], cs.N[kl]) < 0
            ok = front & spec[lit]
            if np.any(ok):
                j = cs.light_index[kl[ok]]
                emit(cs.light_group[j], sid[lit][ok], thr[lit][ok] * cs.light_le[j, bin_index])
        pos = o + t[:, None] * d
        nrm = cs.N[np.maximum(k, 0)]
        facing = np.einsum("ij,ij->i", d, nrm) < 0
        ns = np.where(facing[:, None], nrm, -nrm)

        new_d = np.zeros_like(d)
        new_thr = thr.copy()
        keep = np.zeros(len(sid), dtype=bool)
        new_spec = np.zeros(len(sid), dtype=bool)

        # diffuse: next-event estimation, then mixture sampling
        dif = kind == KIND_DIFFUSE
        if np.any(dif):
            idx = np.flatnonzero(dif)
            p, nn, kd = pos[idx], ns[idx], k[idx]
            alb = cs.albedo[kd]
            for j, L in enumerate(cs.lights):
                uu = u[idx, 5 + 2 * j]
                vv = u[idx, 6 + 2 * j]
                if L["kind"] == "area":
                    y = L["c"] + uu[:, None] * L["eu"] + vv[:, None] * L["ev"]
                    seg = y - p
                    r2 = np.einsum("ij,ij->i", seg, seg)
                    wn = seg / np.sqrt(r2)[:, None]
                    cs_ = np.einsum("ij,ij->i", wn, nn)
                    cl = -(wn @ L["n"])
                    ok = (cs_ > 0) & (cl > 0)
                    val = thr[idx] * alb / np.pi * L["le"][bin_index] * cs_ * cl * L["area"] / r2
                    skip_b = np.full(len(idx), L["rect_index"])
                else:
                    seg = L["pos"] - p
                    r2 = np.einsum("ij,ij->i", seg, seg)
                    wn = seg / np.sqrt(r2)[:, None]
                    cs_ = np.einsum("ij,ij->i", wn, nn)
                    ok = cs_ > 0
                    val = thr[idx] * alb / np.pi * L["intensity"][bin_index] * cs_ / r2
                    skip_b = np.full(len(idx), -1)
                if not group_mask[L["group"]] or not np.any(ok):
                    continue
                sub = np.flatnonzero(ok)
                vis = ~cs.occluded(p[sub], seg[sub], kd[sub], skip_b[sub])
                sub = sub[vis]
                contrib[L["group"], sid[idx[sub]]] += val[sub]
            wdir, pdf = _diffuse_direction(cs, p, nn, kd, u[idx])
            cos_o = np.einsum("ij,ij->i", wdir, nn)
            good = (cos_o > 0) & (pdf > 0)
            f = np.where(good, alb / np.pi * cos_o / np.where(pdf > 0, pdf, 1.0), 0.0)
            new_d[idx] = wdir
            new_thr[idx] = thr[idx] * f
            keep[idx] = good & (f != 0)

        mir = kind == KIND_MIRROR
        if np.any(mir):
            dm = d[mir]
            nm = nrm[mir]
            new_d[mir] = dm - 2 * np.einsum("ij,ij->i", dm, nm)[:, None] * nm
            keep[mir] = True
            new_spec[mir] = True

        wb = kind == KIND_WBSDF
        if np.any(wb):
            for pk in np.unique(k[wb]):
                sel = np.flatnonzero(wb & (k == pk))
                dd, nd, wthr, valid, rej, neg = _wbsdf_vertex(cs, int(pk), d[sel], ns[sel], ha[sel], hb[sel],
                                                             u[sel, 1], lam, strategy, cos_lim)
                rej, lost, total = rej
                st["paraxial_rejected_energy"] += float(np.abs(thr[sel]) @ lost)
                st["wbsdf_energy"] += float(np.abs(thr[sel]) @ total)
                new_d[sel] = dd
                new_thr[sel] = thr[sel] * wthr
                keep[sel] = valid
                new_spec[sel] = True
                st["paraxial_rejected"] += rej
                st["evanescent"] += nd
                st["negative_samples"] += neg

        # russian roulette on |throughput|
        if depth + 1 >= RR_DEPTH:
            q = np.minimum(1.0, np.abs(new_thr))
            surv = u[:, 3] < q
            new_thr = np.where(surv, new_thr / np.where(q > 0, q, 1.0), 0.0)
            keep &= surv
        keep &= alive
        o, d = pos[keep], new_d[keep]
        thr, last, spec, sid = new_thr[keep], k[keep], new_spec[keep], sid[keep]
    return contrib, st


def _diffuse_direction(cs: _Compiled, p, nn, kd, u):
    """Mixture of cosine and specular-patch area sampling; returns ``(dir, pdf)``."""
    t1 = cs.T1[kd]
    # nn is +-N, so cross(nn, t1) is +-T2 with the same sign
    t2 = cs.T2[kd] * np.einsum("ij,ij->i", nn, cs.N[kd])[:, None]
    r = np.sqrt(u[:, 1])
    phi = 2 * np.pi * u[:, 2]
    z = np.sqrt(np.maximum(0.0, 1 - u[:, 1]))
    cosdir = (r * np.cos(phi))[:, None] * t1 + (r * np.sin(phi))[:, None] * t2 + z[:, None] * nn
    spec = cs.specular
    if len(spec) == 0:
        return cosdir, np.einsum("ij,ij->i", cosdir, nn).clip(0) / np.pi
    use_cos = u[:, 0] < 0.5
    j = spec[np.minimum((u[:, 4] * len(spec)).astype(int), len(spec) - 1)]
    y = cs.C[j] + u[:, 1:2] * cs.EU[j] + u[:, 2:3] * cs.EV[j]
    g = y - p
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    wdir = np.where(use_cos[:, None], cosdir, g)
    pdf = 0.5 * np.einsum("ij,ij->i", wdir, nn).clip(0) / np.pi
    for s in spec:
        t, _, _ = cs._hit_rect(s, p, wdir)
        hit = np.isfinite(t) & (kd != s)
        c = np.abs(wdir @ cs.N[s])
        with np.errstate(divide="ignore", invalid="ignore"):
            ps = np.where(hit & (c > 0), t * t / (cs.area[s] * c), 0.0)
        pdf = pdf + 0.5 / len(spec) * ps
    return wdir, pdf


def _wbsdf_vertex(cs: _Compiled, pk, d, ns, ha, hb, draw, lam, strategy, cos_lim):
    info = cs.wbsdf[pk]
    kern = info["kernel"]
    a, b = info["a"], info["b"]
    coord = (ha if info["axis"] == "u" else hb) * info["length"] - 0.5 * info["length"]
    wo = -d
    ka = wo @ a
    kb = wo @ b
    sin_new, weight, _, valid = kern.sample_many(coord, ka, lam, draw, strategy=strategy)
    if kern.mode == "reflective":
        na, nb = sin_new, -kb
        nz2 = 1.0 - na * na - nb * nb
        sign = 1.0
    else:
        na, nb = sin_new, kb
        nz2 = 1.0 - na * na - nb * nb
        sign = -1.0  # continue through the patch: new ray is minus the incident propagation
    prop = valid & (nz2 > 0)
    nz = np.sqrt(np.clip(nz2, 0.0, None))
    vec = na[:, None] * a + nb[:, None] * b + nz[:, None] * ns
    if kern.mode == "transmissive":
        vec = sign * vec
    guard = nz >= cos_lim
    ok = prop & guard & (weight != 0)
    n_evan = int(np.sum(valid & ~(nz2 > 0)))
    n_rej = int(np.sum(prop & ~guard))
    n_neg = int(np.sum(ok & (weight < 0)))
    aw = np.abs(np.where(prop, weight, 0.0))
    rej = (n_rej, np.where(guard, 0.0, aw), aw)  # count, |weight| dropped, |weight| propagating
    return vec, n_evan, np.where(ok, weight, 0.0), ok, rej, n_neg


def render(scene: Scene, spp: int = 64, seed: int = 0, threads: int = None,
           strategy: str = "importance", groups=None) -> Image:
    """Render ``scene``; deterministic for a given ``seed`` regardless of ``threads``.

    ``groups`` restricts emission to the listed coherence groups while keeping
    every random draw identical, so per-group renders add up bit-exactly to
    the full render.
    """
    if spp < 1:
        raise ArgumentError("spp must be >= 1")
    if seed < 0 or seed >= 1 << 63:
        raise ArgumentError("seed must lie in [0, 2**63)")
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ArgumentError("threads must be >= 1")
    t0 = time.perf_counter()
    cs = _Compiled(scene)
    cam = scene.camera
    npix = cam.width * cam.height
    nb = len(scene.wavelengths)
    G = max(1, len(cs.groups))
    mask = np.ones(G, dtype=bool)
    if groups is not None:
        wanted = set(groups)
        unknown = wanted - set(cs.groups)
        if unknown:
            raise ArgumentError(f"unknown coherence groups {sorted(unknown)}")
        mask = np.array([g in wanted for g in cs.groups]) if cs.groups else mask
    per = max(1, _SAMPLES_PER_CHUNK // spp)
    jobs = [(b, np.arange(s, min(npix, s + per))) for b in range(nb) for s in range(0, npix, per)]

    def run(job):
        b, px = job
        c, st = _trace_chunk(cs, px, spp, b, seed, strategy, mask)
        c = c.reshape(c.shape[0], len(px), spp)
        tot = c.sum(axis=0)
        mean = c.mean(axis=2)
        var = tot.var(axis=1) / spp
        return mean, var, st

    if threads == 1:
        results = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, jobs))
    signed = np.zeros((G, nb, npix))
    var = np.zeros((nb, npix))
    stats = {"paraxial_rejected": 0, "evanescent": 0, "negative_samples": 0, "rays": 0,
             "paraxial_rejected_energy": 0.0, "wbsdf_energy": 0.0}
    for (b, px), (mean, v, st) in zip(jobs, results):
        signed[:, b, px] = mean
        var[b, px] = v
        for key in stats:
            stats[key] += st[key]
    shape = (cam.height, cam.width)
    img = Image(signed.reshape(G, nb, *shape), tuple(scene.wavelengths), list(cs.groups) or [0],
                var.reshape(nb, *shape), spp, stats)
    e = stats["wbsdf_energy"]
    stats["paraxial_rejected_fraction"] = stats["paraxial_rejected_energy"] / e if e > 0 else 0.0
    img.stats.update(spp=spp, seed=seed, strategy=strategy, nonnegativity=img.check_nonnegative(),
                     seconds=time.perf_counter() - t0)
    return img


def trace_pixel(scene: Scene, px: int, py: int, n_samples: int, seed: int = 0, bin_index: int = 0):
    """Per-sample signed contributions of one pixel, shape ``(groups, n_samples)``."""
    cam = scene.camera
    if not (0 <= px < cam.width and 0 <= py < cam.height):
        raise ArgumentError("pixel outside the film")
    cs = _Compiled(scene)
    mask = np.ones(max(1, len(cs.groups)), dtype=bool)
    c, _ = _trace_chunk(cs, np.array([py * cam.width + px]), n_samples, bin_index, seed, "importance", mask)
    return c

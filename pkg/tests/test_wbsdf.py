import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wbsdf_kit.errors import ArgumentError, DataError, SamplingError
from wbsdf_kit.field import ComplexGrid, wdf_1d
from wbsdf_kit.microstructure import GridSpec, Microstructure, realize
from wbsdf_kit.oracle import far_field_intensity
from wbsdf_kit.wbsdf import (WBSDF, StatisticalSurfaceSpec, lobe_fwhm, phase_variance, stam_far_field,
                             statistical_wbsdf)

LAM = 532e-9
GRID = GridSpec(256, 6.25e-8)


@pytest.fixture(scope="module")
def grating():
    return WBSDF.from_microstructure(Microstructure.binary_phase_grating(1.33e-7, 2e-6), [LAM], GRID, "periodic")


def test_flat_surface_is_unit_mirror():
    b = WBSDF.from_microstructure(Microstructure.flat(), [LAM], GridSpec(64, 1e-7), "periodic")
    theta_o, weight, pdf = b.sample(0.0, np.radians(20), LAM, 0.3)
    assert theta_o == pytest.approx(-np.radians(20), abs=1e-9)  # outgoing angle on the other side of the normal
    assert weight == pytest.approx(1.0)
    assert pdf == pytest.approx(1.0)


def test_prefiltered_grating_is_nonnegative(grating):
    assert grating.table(LAM).values.min() < 0  # per-position rows are signed
    p = grating.prefiltered()
    v = p.table(LAM).values
    assert v.shape[0] == 1 and v.min() >= 0
    np.testing.assert_allclose(v[0], grating.table(LAM).values.mean(axis=0), atol=1e-12 * v.max())


def test_box_prefilter_keeps_marginal(grating):
    w0 = grating.table(LAM)
    neg = []
    for width in (2e-6, 4e-6, 8e-6):
        w1 = grating.prefiltered(width).table(LAM)
        np.testing.assert_allclose(w1.values.sum(axis=0), w0.values.sum(axis=0), atol=1e-12 * np.abs(w0.values).max())
        neg.append(-w1.values.min() / w1.values.max())
    # half-bin cross terms of the discrete table repeat with the patch, not the pitch
    assert neg[0] > neg[1] > neg[2] > 0


def test_first_order_angle(grating):
    p = grating.prefiltered()
    draws = np.linspace(0.001, 0.999, 4001)
    sin_o, weight, pdf, valid = p.sample_many(np.zeros_like(draws), 0.0, LAM, draws)
    orders = np.unique(np.round(np.abs(sin_o[weight > 0.05 * weight.max()]), 6))
    assert np.any(np.isclose(orders, LAM / 2e-6, atol=1e-3))


@pytest.mark.parametrize("strategy", ["importance", "uniform"])
def test_sampler_expectation(grating, strategy):
    """E[weight f(sin_o)] equals the propagating sum of W du f."""
    w = grating.table(LAM)
    f = lambda s: np.cos(3 * s) + 2
    rng = np.random.default_rng(5)
    row_x = w.x[17]
    draws = rng.random(200000)
    sin_o, weight, pdf, valid = grating.sample_many(np.full_like(draws, row_x), 0.1, LAM, draws, strategy)
    est = np.mean(weight * f(sin_o))
    s_all = -(0.1 + w.u * LAM)
    prop = np.abs(0.1 + w.u * LAM) < 1
    exact = np.sum(w.values[17][prop] * w.du * f(s_all[prop]))
    assert est == pytest.approx(exact, rel=0.03)


def test_importance_has_lower_variance(grating):
    p = grating.prefiltered()
    draws = np.random.default_rng(2).random(50000)
    var = {}
    for strat in ("importance", "uniform"):
        _, weight, _, _ = p.sample_many(np.zeros_like(draws), 0.0, LAM, draws, strat)
        var[strat] = weight.var()
    assert var["uniform"] > 10 * var["importance"]


def test_unknown_strategy(grating):
    with pytest.raises(ArgumentError):
        grating.sample_many(0.0, 0.0, LAM, 0.5, "magic")


def test_no_propagating_bin():
    w = wdf_1d(ComplexGrid(np.exp(2j * np.pi * np.arange(64) * 28 / 64), 1e-7), "periodic")
    b = WBSDF.from_wdf(w, "transmissive", LAM)
    with pytest.raises(SamplingError):
        b.sample(0.0, 0.0, LAM, 0.5)
    assert b.evanescent_fraction(0.0, 0.0, LAM) == pytest.approx(1.0)


def test_adjoint_reverses_transmission():
    slit = Microstructure.slit(4e-6)
    grid = GridSpec(256, 2.5e-7)
    b = WBSDF.from_microstructure(slit, [LAM], grid, "zero")
    a = b.adjoint()
    x = 0.3e-6
    ti, to = np.radians(3), np.radians(-5)
    assert a.eval(x, to, ti, LAM) == pytest.approx(b.eval(x, ti, to, LAM), rel=1e-9, abs=1e-12)
    r = WBSDF.from_microstructure(Microstructure.flat(), [LAM], grid, "periodic")
    assert r.adjoint() is r


def test_all_zero_table_rejected():
    with pytest.raises(DataError):
        WBSDF.from_wdf(wdf_1d(ComplexGrid(np.zeros(8), 1e-7)))


def test_stam_matches_fraunhofer():
    t = realize(Microstructure.slit(20e-6), 550e-9, 0.0, GridSpec(1024, 0.25e-6))
    b = WBSDF.from_wdf(wdf_1d(t, "zero"), "transmissive", 550e-9)
    st_, ref = far_field_intensity(t, 550e-9, pad=2)
    keep = np.abs(st_) < np.sin(np.radians(10))
    got = stam_far_field(b, 0.0, np.arcsin(st_[keep]), 550e-9)
    assert np.abs(got - ref[keep]).sum() / ref[keep].sum() < 0.01


def test_statistical_row_integrates_to_one():
    lam, n, dx = 550e-9, 8192, 50e-9
    spec = StatisticalSurfaceSpec.gaussian(2 * lam, 5e-6)
    w = statistical_wbsdf(spec, 0.0, lam, n, dx)
    assert w.values.shape[0] == 1
    assert w.values.sum() * w.du == pytest.approx(1.0, rel=1e-9)


def test_smooth_surface_is_specular():
    w = statistical_wbsdf(StatisticalSurfaceSpec.gaussian(0.0, 1e-6), 0.0, 550e-9, 256, 1e-7)
    assert np.count_nonzero(np.abs(w.values) > 1e-9 * np.abs(w.values).max()) == 1


@settings(max_examples=15, deadline=None)
@given(st.floats(2.0, 10.0), st.floats(2.0, 10.0))
def test_fwhm_grows_with_roughness(s1, s2):
    if abs(s1 - s2) < 0.5:
        return
    lam, n, dx, a = 550e-9, 8192, 50e-9, 60e-6
    widths = []
    for s in sorted((s1, s2)):
        w = statistical_wbsdf(StatisticalSurfaceSpec.quartic(s * lam, a, n, dx), 0.0, lam, n, dx)
        widths.append(lobe_fwhm(w.u * lam, w.values[0]))
    assert widths[0] < widths[1]


def test_quartic_covariance_is_valid():
    spec = StatisticalSurfaceSpec.quartic(1e-6, 50e-6, 4096, 50e-9)
    m = np.arange(4096)
    lags = 50e-9 * np.where(m < 2048, m, m - 4096)
    eig = np.fft.fft(spec.rho(lags)).real
    assert eig.min() > -1e-9 * eig.max()
    assert spec.rho(np.array([0.0]))[0] == pytest.approx(1.0)


def test_phase_variance_formula():
    assert phase_variance(550e-9, 0.0, 550e-9) == pytest.approx((4 * np.pi) ** 2)


@pytest.fixture(scope="module")
def sinusoid():
    return WBSDF.from_microstructure(Microstructure.sinusoidal_grating(2e-6, m=2.0), [LAM], GRID, "periodic")


@pytest.mark.parametrize("s", [Microstructure.flat(), Microstructure.sinusoidal_grating(2e-6, m=0.0)])
def test_unmodulated_surface_scatters_only_to_mirror(s):
    b = WBSDF.from_microstructure(s, [LAM], GRID, "periodic")
    du = b.table(LAM).du
    for th in np.radians([0.0, 12.0, -35.0]):
        assert b.eval(0.3e-6, th, -th, LAM) == pytest.approx(1.0 / du)
        theta_o = np.radians(np.linspace(-80, 80, 321))
        vals = b.eval(0.3e-6, th, theta_o, LAM)
        off = np.abs(b.delta_u(th, theta_o, LAM)) >= du
        assert not np.any(vals[off])


def test_eval_peak_at_first_order(grating):
    p = grating.prefiltered()
    theta_o = np.radians(np.linspace(5, 25, 20001))
    vals = p.eval(0.0, 0.0, theta_o, LAM)
    assert np.degrees(theta_o[np.argmax(vals)]) == pytest.approx(np.degrees(np.arcsin(LAM / 2e-6)), abs=1e-3)


def test_mirror_rule(grating):
    w = grating.table(LAM)
    refl, trans = WBSDF.from_wdf(w, "reflective", LAM), WBSDF.from_wdf(w, "transmissive", LAM)
    rng = np.random.default_rng(4)
    x = rng.uniform(-8e-6, 8e-6, 200)
    ti, to = rng.uniform(-1.2, 1.2, (2, 200))
    assert np.array_equal(refl.eval(x, ti, to, LAM), trans.eval(x, ti, -to, LAM))


def test_reciprocity_for_symmetric_kernel(sinusoid):
    p = WBSDF.from_wdf(sinusoid.prefiltered().table(LAM), "transmissive", LAM)
    row = p.table(LAM).values[0]
    k0 = int(round(-p.table(LAM).u0 / p.table(LAM).du))
    np.testing.assert_allclose(row[k0 + 1:], row[k0 - 1:k0 - len(row[k0 + 1:]) - 1:-1], atol=1e-12 * row.max())
    rng = np.random.default_rng(6)
    ti, to = rng.uniform(-0.5, 0.5, (2, 100))
    np.testing.assert_allclose(p.eval(0.0, ti, to, LAM), p.eval(0.0, to, ti, LAM), atol=1e-12 * row.max())


def test_pdf_is_normalized_bin_mass(sinusoid):
    w = sinusoid.table(LAM)
    r, sin_i = 40, 0.2
    draws = np.random.default_rng(8).random(5000)
    sin_o, weight, pdf, valid = sinusoid.sample_many(np.full_like(draws, w.x[r]), sin_i, LAM, draws)
    col = np.rint(((-sin_o - sin_i) / LAM - w.u0) / w.du).astype(int)
    prop = np.abs(sin_i + w.u * LAM) < 1
    mass = np.abs(w.values[r][prop]).sum()
    np.testing.assert_allclose(pdf, np.abs(w.values[r, col]) / mass, rtol=1e-12)
    np.testing.assert_allclose(np.abs(weight), mass * w.du, rtol=1e-12)


def test_sampled_histogram_matches_table(sinusoid):
    p = sinusoid.prefiltered()
    w = p.table(LAM)
    n = 1_000_000
    sin_o, _, _, valid = p.sample_many(np.zeros(n), 0.0, LAM, np.random.default_rng(9).random(n))
    assert valid.all()
    col = np.rint((-sin_o / LAM - w.u0) / w.du).astype(int)
    counts = np.bincount(col, minlength=w.values.shape[1])
    prop = np.abs(w.u * LAM) < 1
    prob = np.where(prop, np.abs(w.values[0]), 0.0)
    prob /= prob.sum()
    sigma = np.sqrt(n * prob * (1 - prob))
    assert np.all(np.abs(counts - n * prob) <= 3 * sigma + 1e-9)


def test_importance_estimator_unbiased(sinusoid):
    f = lambda s: np.cos(3 * s) + 2
    n = 1_000_000
    for b in (sinusoid.prefiltered(), sinusoid):
        w = b.table(LAM)
        r = min(17, w.values.shape[0] - 1)
        x = w.x[r] if w.values.shape[0] > 1 else 0.0
        prop = np.abs(0.1 + w.u * LAM) < 1
        exact = np.sum(w.values[r][prop] * w.du * f(-(0.1 + w.u[prop] * LAM)))
        sin_o, weight, _, _ = b.sample_many(np.full(n, x), 0.1, LAM, np.random.default_rng(10).random(n))
        est = weight * f(sin_o)
        # nonnegative table: fixed 0.5 %; signed rows: 4 standard errors
        tol = 0.005 * exact if b is not sinusoid else 4 * est.std() / np.sqrt(n)
        assert abs(est.mean() - exact) <= tol


def test_statistical_carrier_sets_specular_direction():
    lam, n, dx = 550e-9, 256, 1e-7
    du = 1 / (n * dx)
    theta_i = np.arcsin(10 * du * lam)
    w = statistical_wbsdf(StatisticalSurfaceSpec.gaussian(0.0, 1e-6), theta_i, lam, n, dx)
    assert w.u[np.argmax(w.values[0])] == pytest.approx(np.sin(theta_i) / lam)
    assert np.count_nonzero(np.abs(w.values) > 1e-9 * np.abs(w.values).max()) == 1


def test_specular_fraction_grows_as_surface_smooths():
    lam, n, dx = 550e-9, 4096, 50e-9
    fracs = []
    for s in (0.3, 0.1, 0.03, 0.01, 0.0):
        row = statistical_wbsdf(StatisticalSurfaceSpec.gaussian(s * lam, 5e-6), 0.0, lam, n, dx).values[0]
        k0 = n // 2
        fracs.append(row[k0 - 1:k0 + 2].sum() / row.sum())
    assert np.all(np.diff(fracs) > 0)
    assert fracs[-1] == pytest.approx(1.0)


def test_stam_flat_and_slit_zero():
    flat = WBSDF.from_microstructure(Microstructure.flat(), [LAM], GridSpec(64, 1e-7), "periodic")
    th = np.radians(np.linspace(-30, 30, 61))
    ff = stam_far_field(flat, np.radians(10), th, LAM)
    near = np.abs(flat.delta_u(np.radians(10), th, LAM)) < flat.table(LAM).du  # bilinear support
    assert not np.any(ff[~near]) and np.argmax(ff) == np.argmin(np.abs(th + np.radians(10)))
    w = 16e-6
    b = WBSDF.from_microstructure(Microstructure.slit(w), [LAM], GridSpec(1024, 0.25e-6), "zero")
    peak = stam_far_field(b, 0.0, np.array([0.0]), LAM)[0]
    zero = stam_far_field(b, 0.0, np.arcsin(LAM / w * np.array([1.0, 1.02])), LAM)
    assert abs(zero[0]) < 1e-12 * peak and zero[1] > abs(zero[0])

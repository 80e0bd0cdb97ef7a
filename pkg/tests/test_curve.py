from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.curve import (
    AngleProfile,
    CurveError,
    SampledCurve,
    closure_residual,
    geometry,
    median_curvature,
    median_curvature_samples,
    profile_from_curve,
    reconstruct_from_curvature,
    resample,
    roundness,
    support_and_width,
    theta_grid,
)
from curveflow.presets import circle, ellipse, ellipse_radius_of_curvature, support_oval


def brute_median(theta, k):
    # largest b such that k > b on some closed window of length pi (sampled)
    m = len(k)
    best = -np.inf
    for start in range(m):
        idx = [(start + j) % m for j in range(m // 2 + 1)]
        best = max(best, min(k[i] for i in idx))
    return best


def test_circle_geometry_closed_forms():
    g = geometry(circle(2.0, 400))
    assert g.winding == 1
    assert abs(g.length - 2 * 400 * 2.0 * math.sin(math.pi / 400)) < 1e-12
    assert np.allclose(g.curvature, 0.5, rtol=1e-4)
    assert abs(g.turning.sum() - 2 * math.pi) < 1e-12


def test_reversed_curve_flips_winding_and_sign():
    c = circle(1.0, 64)
    g = geometry(c.reversed())
    assert g.winding == -1
    assert g.area < 0


@pytest.mark.parametrize("bad", [np.zeros((5, 2)), np.full((10, 2), np.nan), np.zeros((10, 3))])
def test_invalid_curves_rejected(bad):
    with pytest.raises(CurveError):
        SampledCurve(bad)


def test_duplicate_points_rejected():
    pts = circle(1.0, 16).points.copy()
    pts[3] = pts[2]
    with pytest.raises(CurveError):
        SampledCurve(pts)


@settings(max_examples=25, deadline=None)
@given(
    lam=st.floats(0.05, 20.0),
    shift=st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
)
def test_scale_and_translation_covariance(lam, shift):
    c = ellipse(2.0, 1.0, 64)
    g0 = geometry(c)
    g1 = geometry(c.scaled(lam).translated(shift))
    assert math.isclose(g1.length, lam * g0.length, rel_tol=1e-12)
    assert math.isclose(g1.area, lam**2 * g0.area, rel_tol=1e-11)
    assert np.allclose(g1.curvature, g0.curvature / lam, rtol=1e-8)
    assert math.isclose(g1.length * g1.int_k2(), g0.length * g0.int_k2(), rel_tol=1e-9)


def test_resample_preserves_shape():
    c = ellipse(2.0, 1.0, 64)
    fine = resample(c, 256)
    true_area = 2 * math.pi
    # spline resampling approaches the exact ellipse, not the coarse polygon
    assert abs(geometry(fine).area - true_area) < abs(geometry(c).area - true_area)
    # equal spline arclength; chords differ by O((k ds)^2 / 24)
    e = geometry(fine).edge_lengths
    assert np.ptp(e) / e.mean() < 1e-3


def test_profile_reconstruction_roundtrip_circle():
    p = AngleProfile(np.full(128, 0.5), anchor=(0.0, -2.0))
    c = reconstruct_from_curvature(p)
    r = np.hypot(*c.points.T)
    assert np.allclose(r, 2.0, atol=1e-12)


def test_profile_length_and_area_ellipse():
    p = AngleProfile(1.0 / ellipse_radius_of_curvature(theta_grid(256), 2.0, 1.0))
    assert abs(p.area() - 2 * math.pi) < 1e-10
    # ellipse perimeter, Ramanujan II is accurate to ~1e-10 here
    a, b = 2.0, 1.0
    hh = ((a - b) / (a + b)) ** 2
    perim = math.pi * (a + b) * (1 + 3 * hh / (10 + math.sqrt(4 - 3 * hh)))
    assert abs(p.length() - perim) < 1e-6


def test_closure_residual_detects_open_profile():
    th = theta_grid(64)
    good = AngleProfile(1.0 / (1.0 + 0.3 * np.cos(2 * th)))
    bad = AngleProfile(1.0 / (1.0 + 0.3 * np.cos(th)))
    assert max(map(abs, closure_residual(good))) < 1e-12
    assert max(map(abs, closure_residual(bad))) > 0.1
    with pytest.raises(CurveError):
        reconstruct_from_curvature(bad)


def test_profile_from_polygon_matches_exact_ellipse():
    c = ellipse(2.0, 1.0, 1024)
    p = profile_from_curve(c, 128)
    exact = 1.0 / ellipse_radius_of_curvature(p.theta, 2.0, 1.0)
    assert np.max(np.abs(p.k - exact) / exact) < 1e-3


@pytest.mark.parametrize("m", [16, 17, 33, 64])
def test_median_matches_brute_force(m):
    rng = np.random.default_rng(m)
    k = rng.uniform(0.5, 3.0, m)
    if m % 2 == 0:
        assert math.isclose(median_curvature(AngleProfile(k)), brute_median(theta_grid(m), k))
    assert math.isclose(median_curvature_samples(theta_grid(m), k), brute_median(theta_grid(m), k))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=16, max_size=16))
def test_median_property(values):
    k = np.array(values)
    p = AngleProfile(k)
    med = median_curvature(p)
    assert k.min() <= med <= k.max()
    assert math.isclose(med, brute_median(p.theta, k))
    # scale covariance
    assert math.isclose(median_curvature(AngleProfile(3.0 * k)), 3.0 * med)


def test_median_of_ellipse_bounded_by_length_over_area():
    p = AngleProfile(1.0 / ellipse_radius_of_curvature(theta_grid(256), 2.0, 1.0))
    assert median_curvature(p) < p.length() / p.area()


def test_roundness():
    assert roundness(circle(1.0, 128))[0] == pytest.approx(1.0, abs=1e-10)
    ratio, iso = roundness(ellipse(2.0, 1.0, 512))
    assert ratio == pytest.approx(8.0, rel=1e-3)
    assert iso == pytest.approx(1.18881, abs=1e-4)


def test_support_oval_width():
    c = support_oval(2.0, (0.0, 0.2), 1024, representation="polygon")
    s = support_and_width(c, m=64, origin=(0.0, 0.0))
    assert np.allclose(s.h, 2.0 + 0.2 * np.cos(2 * s.angles), atol=1e-6)
    assert np.allclose(s.w, 4.0 + 0.4 * np.cos(2 * s.angles), atol=1e-6)


def test_support_identity_converges():
    res = []
    for n in (128, 256, 512):
        s = support_and_width(ellipse(2.0, 1.0, n))  # angle grid refines with n
        res.append(np.abs(s.identity_residual()).max())
    assert res[0] / res[1] > 3.0 and res[1] / res[2] > 3.0


def test_ellipse_width_extremes():
    s = support_and_width(ellipse(2.0, 1.0, 512), m=64)
    assert s.w.max() == pytest.approx(4.0, abs=1e-6)
    assert s.w.min() == pytest.approx(2.0, abs=1e-6)


def test_support_rejects_nonconvex():
    from curveflow.presets import flower

    with pytest.raises(CurveError):
        support_and_width(flower(1.0, 0.3, 3, 128))


def test_resample_uniformizes_clustered_circle():
    u = np.linspace(0, 1, 200, endpoint=False)
    t = 2 * np.pi * u + 0.6 * np.sin(2 * np.pi * u)
    c = SampledCurve(np.stack([np.cos(t), np.sin(t)], axis=1))
    g = geometry(resample(c, 200))
    assert np.abs(g.edge_lengths - g.length / 200).max() < 1e-6 * g.length


def test_resample_uniform_circle_is_identity():
    c = circle(1.0, 64)
    assert np.abs(resample(c, 64).points - c.points).max() < 1e-12


def test_width_entropy_ratio_circle():
    from curveflow.curve import width_entropy_ratio

    # circle of radius R: w = 2R, E = 2 pi log(1/R) / (2 pi R)
    for R in (0.5, 2.0):
        expected = 2 * R * math.exp(-math.log(R) / R)
        assert width_entropy_ratio(circle(R, 512)) == pytest.approx(expected, rel=1e-4)

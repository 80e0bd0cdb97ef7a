from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.curve import AngleProfile
from curveflow.flow import FlowParams, evolve
from curveflow.rescaling import (
    RescalingError,
    fit_circle,
    gaussian_density,
    limit_shape_residual,
    monotonicity_track,
    physical_time,
    q_field,
    rescale,
    rescale_state,
    rescaled_area_limit,
    rescaled_time,
    scale_factor,
)


@settings(max_examples=50, deadline=None)
@given(T=st.floats(0.01, 10), frac=st.floats(0.0, 0.999999))
def test_time_maps_are_inverse(T, frac):
    t = frac * T
    that = rescaled_time(t, T)
    assert physical_time(that, T) == pytest.approx(t, abs=1e-12 * T)
    assert scale_factor(t, T) == pytest.approx(math.exp(that) / math.sqrt(2 * T))


def test_exact_shrinking_circle_is_stationary():
    # sigma2 = 0: R(t)^2 = 1 - 2t, T = 1/2, rescaled radius is 1 at all times
    p = FlowParams(sigma1=1.0, sigma2=0.0)
    T = 0.5
    for t in (0.0, 0.3, 0.45):
        R = math.sqrt(1 - 2 * t)
        prof = AngleProfile(np.full(64, 1.0 / R), anchor=(0.0, -R))
        st_ = rescale_state(prof, t, T, (0.0, 0.0))
        assert st_.A_hat == pytest.approx(math.pi, rel=1e-12)
        assert np.allclose(np.hypot(*st_.points.T), 1.0, atol=1e-12)
        assert np.max(np.abs(q_field(st_, T, p))) < 1e-12
        assert limit_shape_residual(st_, p).sup_residual < 1e-12
        R_gauss = st_.integrate(gaussian_density(st_, p))
        assert R_gauss == pytest.approx(2 * math.pi * math.exp(-0.5), rel=1e-12)


def test_fit_circle_exact():
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    pts = np.stack([3 + 2 * np.cos(t), -1 + 2 * np.sin(t)], axis=1)
    c, r = fit_circle(pts)
    assert np.allclose(c, [3, -1]) and r == pytest.approx(2.0)


@pytest.fixture(scope="module")
def csf_circle_run():
    p = FlowParams(sigma1=1.0, sigma2=0.0, theta_scheme="midpoint", area_floor_fraction=1e-5)
    prof = AngleProfile(np.full(32, 1.0), anchor=(0.0, -1.0))
    return evolve(prof, p)


def test_rescaled_circle_run(csf_circle_run):
    traj = csf_circle_run
    assert traj.T_est == pytest.approx(0.5, abs=1e-6)
    rs = rescale(traj)
    assert np.allclose(rs.origin, 0.0, atol=1e-6)
    area = rescaled_area_limit(rs)
    assert area.gap_last < 1e-4
    mono = monotonicity_track(rs)
    assert mono.max_increase < 1e-8
    assert mono.max_residual < 1e-4
    with pytest.raises(RescalingError):
        rescale(traj, T=traj.records[-1].t)

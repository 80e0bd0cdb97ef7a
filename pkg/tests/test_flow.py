from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from curveflow.curve import AngleProfile
from curveflow.flow import (
    FlowParams,
    evolve,
    maximal_time_upper_bound,
    nonconvex_threshold,
    nonconvex_threshold_squared,
    record_for,
    threshold_functional,
    threshold_predicate,
    verify_identities,
)
from curveflow.presets import circle, ellipse, flower


def circle_time(R, R0, s1, s2):
    """Time for a circle to shrink from R0 to R under R' = -(s1/R + s2)."""
    if s2 == 0:
        return (R0**2 - R**2) / (2 * s1)
    return (R0 - R) / s2 - s1 / s2**2 * math.log((s1 + s2 * R0) / (s1 + s2 * R))


def circle_radius(t, R0, s1, s2):
    return brentq(lambda R: circle_time(R, R0, s1, s2) - t, 1e-12, R0)


def test_params_roundtrip_and_validation():
    p = FlowParams(sigma1=2.0, sigma2=0.5, theta_scheme="midpoint")
    assert FlowParams.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        FlowParams.from_dict({"sigma3": 1})
    for bad in ({"sigma1": 0}, {"sigma2": -1}, {"cfl_factor": 1.5}, {"theta_scheme": "rk4"}):
        with pytest.raises(ValueError):
            FlowParams(**bad)


def test_t_max_arithmetic():
    p = FlowParams(sigma1=1.0, sigma2=1.0)
    c = circle(1.0, 2048)
    assert maximal_time_upper_bound(c, p) == pytest.approx(0.5, rel=1e-5)
    # sigma2 = 0: area bound only
    assert maximal_time_upper_bound(c, p.with_(sigma2=0.0)) == pytest.approx(0.5, rel=1e-5)
    # length bound wins when sigma2 is large
    assert maximal_time_upper_bound(c, p.with_(sigma2=4.0)) == pytest.approx(1.0 / 4.0, rel=1e-5)
    prof = AngleProfile(np.full(64, 1.0 / 3.0))
    assert maximal_time_upper_bound(prof, p) == pytest.approx(min(6 * math.pi / (2 * math.pi), 9 * math.pi / (2 * math.pi)))


def test_threshold_value():
    p = FlowParams(sigma1=1.0, sigma2=1.0)
    expected = (math.sqrt(25 + 14 / 0.5) - 5) / 14
    assert nonconvex_threshold(p, 0.5, 1.0) == pytest.approx(expected, rel=1e-15)
    # the quoted reference 0.162862 is a rounding of 0.1628650
    assert nonconvex_threshold(p, 0.5, 1.0) == pytest.approx(0.162862, abs=5e-6)
    assert nonconvex_threshold_squared(p, 0.5) == pytest.approx(expected**2)
    with pytest.raises(ValueError):
        nonconvex_threshold(p, 0.5, 2.0)


@settings(max_examples=50, deadline=None)
@given(
    s1=st.floats(0.1, 5), s2=st.floats(0.0, 5), T=st.floats(0.01, 10), a=st.floats(0.01, 1.99), scale=st.floats(1.01, 4)
)
def test_threshold_monotone(s1, s2, T, a, scale):
    p = FlowParams(sigma1=s1, sigma2=s2)
    b = nonconvex_threshold(p, T, a)
    assert b > 0
    assert nonconvex_threshold(p, T * scale, a) < b
    assert nonconvex_threshold(p, T, min(a * scale, 1.999)) <= b
    assert nonconvex_threshold(p.with_(sigma2=s2 + 1), T, a) < b


def test_threshold_functional_zero_on_circle_and_scale_covariant():
    assert threshold_functional(circle(1.0, 256)) < 1e-9
    f = flower(1.0, 0.05, 3, 256)
    v = threshold_functional(f)
    for lam in (0.1, 10.0):
        # sqrt(L) ||k_s||_2 has units of 1/length
        assert threshold_functional(f.scaled(lam)) == pytest.approx(v / lam, rel=1e-10)
    check = threshold_predicate(f, FlowParams())
    assert check.squared_value == pytest.approx(check.value**2)
    assert check.holds == (check.value <= check.bound)


@pytest.mark.parametrize("s2", [0.0, 1.0])
def test_circle_polygon_follows_ode(s2):
    p = FlowParams(sigma1=1.0, sigma2=s2, t_cap=0.1)
    traj = evolve(circle(1.0, 128), p)
    assert traj.termination == "t_cap"
    rec = traj.records[-1]
    R_exact = circle_radius(rec.t, 1.0, 1.0, s2)
    assert math.sqrt(rec.A / math.pi) == pytest.approx(R_exact, rel=2e-3)


@pytest.mark.parametrize("scheme", ["euler", "midpoint"])
def test_circle_theta_follows_ode(scheme):
    p = FlowParams(sigma1=1.0, sigma2=1.0, t_cap=0.1, theta_scheme=scheme)
    prof = AngleProfile(np.full(32, 1.0), anchor=(0.0, -1.0))
    traj = evolve(prof, p)
    rec = traj.records[-1]
    R_exact = circle_radius(rec.t, 1.0, 1.0, 1.0)
    tol = 1e-3 if scheme == "euler" else 1e-6
    assert 1.0 / rec.k_max == pytest.approx(R_exact, rel=tol)
    # the anchor (bottom point) rises as the circle shrinks about the origin
    assert traj.final.anchor[1] == pytest.approx(-R_exact, rel=tol)


def test_terminations_and_extinction_estimate():
    p = FlowParams(area_floor_fraction=1e-2)
    traj = evolve(circle(1.0, 64), p)
    assert traj.termination == "area_floor"
    assert traj.T_est == pytest.approx(1 - math.log(2), abs=2e-3)
    short = evolve(circle(1.0, 64), p.with_(t_cap=0.01))
    assert short.termination == "t_cap" and short.T_est is None
    capped = evolve(circle(1.0, 64), p.with_(k_cap=2.0))
    assert capped.termination == "k_cap"
    with pytest.raises(RuntimeError):
        traj.set_termination("t_cap")


def test_identities_hold_on_short_ellipse_run():
    traj = evolve(ellipse(2.0, 1.0, 128), FlowParams(t_cap=0.2))
    rep = verify_identities(traj)
    assert max(rep.length, rep.area, rep.energy) < 5e-3
    assert {r.omega for r in traj.records} == {1}


def test_nonconvex_flower_keeps_winding_and_becomes_convex():
    traj = evolve(flower(1.0, 0.3, 3, 128), FlowParams(area_floor_fraction=1e-2))
    assert {r.omega for r in traj.records} == {1}
    k_min = traj.series("k_min")
    assert k_min[0] < 0 < k_min[-1]


def test_theta_solver_keeps_min_curvature_nondecreasing():
    prof = AngleProfile(1.0 / (1.0 + 0.5 * np.cos(2 * np.linspace(0, 2 * np.pi, 64, endpoint=False))))
    traj = evolve(prof, FlowParams(t_cap=0.3, theta_scheme="midpoint"))
    k_min = traj.series("k_min")
    assert np.all(np.diff(k_min) >= -1e-8)


def test_record_for_profile_and_polygon_agree():
    e = ellipse(2.0, 1.0, 2048)
    from curveflow.curve import profile_from_curve

    a = record_for(e, FlowParams())
    b = record_for(profile_from_curve(e, 256), FlowParams())
    assert a.L == pytest.approx(b.L, rel=1e-5)
    assert a.A == pytest.approx(b.A, rel=1e-4)
    assert a.int_k2 == pytest.approx(b.int_k2, rel=1e-4)
    assert a.median_k == pytest.approx(b.median_k, rel=1e-2)

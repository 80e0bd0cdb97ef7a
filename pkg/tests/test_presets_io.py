from __future__ import annotations

import math

import numpy as np
import pytest

from curveflow import io
from curveflow.curve import AngleProfile, CurveError, geometry, reconstruct_from_curvature
from curveflow.presets import (
    PRESET_NAMES,
    ellipse,
    flower,
    flower_convexity_limit,
    perturbed_circle,
    preset,
    support_oval,
)
from curveflow.svg import frame_svg


@pytest.mark.parametrize("name", PRESET_NAMES)
@pytest.mark.parametrize("rep", ["polygon", "profile"])
def test_every_preset_builds(name, rep):
    if name == "flower" and rep == "profile":
        # the default flower is non-convex and has no tangent-angle profile
        with pytest.raises(CurveError):
            preset(name, {}, n=128, representation=rep)
        return
    state = preset(name, {}, n=128, representation=rep)
    if rep == "profile" and isinstance(state, AngleProfile):
        reconstruct_from_curvature(state)
    else:
        assert geometry(state).winding == 1


def test_unknown_preset_and_bad_params():
    with pytest.raises(ValueError):
        preset("square")
    with pytest.raises(ValueError):
        preset("circle", {"radius": 2})


def test_flower_convexity_switch():
    assert flower_convexity_limit(3) == pytest.approx(0.1)
    assert geometry(flower(1.0, 0.05, 3, 256)).is_convex
    assert not geometry(flower(1.0, 0.3, 3, 256)).is_convex
    just_below = geometry(flower(1.0, 0.095, 3, 512)).curvature.min()
    just_above = geometry(flower(1.0, 0.105, 3, 512)).curvature.min()
    assert just_below > 0 > just_above


def test_ellipse_presets_agree():
    poly = geometry(ellipse(2.0, 1.0, 1024))
    prof = ellipse(2.0, 1.0, 256, representation="profile")
    assert poly.area == pytest.approx(2 * math.pi, rel=1e-5)
    assert prof.area() == pytest.approx(2 * math.pi, rel=1e-12)
    assert prof.k.max() / prof.k.min() == pytest.approx(8.0)
    pts = reconstruct_from_curvature(prof).points
    assert np.allclose((pts[:, 0] / 2) ** 2 + pts[:, 1] ** 2, 1.0, atol=1e-10)


def test_support_oval_profile_reconstructs_support():
    prof = support_oval(2.0, (0.0, 0.2), 256)
    pts = reconstruct_from_curvature(prof).points
    v = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    h = np.max(pts @ np.stack([np.cos(v), np.sin(v)]), axis=0)
    assert np.allclose(h, 2.0 + 0.2 * np.cos(2 * v), atol=1e-3)
    with pytest.raises(CurveError):
        support_oval(1.0, (0.0, 0.5))


def test_perturbed_circle_is_seeded():
    a = perturbed_circle(seed=3, n=64).points
    b = perturbed_circle(seed=3, n=64).points
    c = perturbed_circle(seed=4, n=64).points
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_curve_roundtrip(tmp_path, suffix):
    c = flower(1.0, 0.3, 3, 64)
    path = tmp_path / f"c{suffix}"
    io.write_curve(path, c)
    assert np.array_equal(io.read_curve(path).points, c.points)


def test_csv_curve_with_header_and_repeated_point(tmp_path):
    pts = ellipse(2.0, 1.0, 16).points
    rows = ["x,y"] + [f"{float(x)!r},{float(y)!r}" for x, y in np.vstack([pts, pts[:1]])]
    path = tmp_path / "c.csv"
    path.write_text("\n".join(rows) + "\n")
    assert np.array_equal(io.read_curve(path).points, pts)


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_profile_roundtrip(tmp_path, suffix):
    p = ellipse(2.0, 1.0, 64, representation="profile")
    path = tmp_path / f"p{suffix}"
    io.write_profile(path, p)
    q = io.read_profile(path)
    assert np.array_equal(q.k, p.k)


def test_profile_grid_checked(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("theta,k\n" + "\n".join(f"{0.1 * i},{1.0}" for i in range(20)) + "\n")
    with pytest.raises(ValueError):
        io.read_profile(path)


def test_state_files(tmp_path):
    p = ellipse(2.0, 1.0, 32, representation="profile")
    name = io.write_state(tmp_path / "s", p)
    assert name.endswith(".profile.json")
    assert isinstance(io.read_state(tmp_path / name), AngleProfile)


def test_json_is_deterministic_and_nan_safe():
    a = io.dumps({"b": float("nan"), "a": np.float64(1.5), "c": np.arange(3)})
    assert a == '{"a": 1.5, "b": null, "c": [0, 1, 2]}'


def test_svg_frame():
    text = frame_svg(flower(1.0, 0.3, 3, 64), title="t=0")
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<circle") == 64

"""Initial curve families."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .curve import TWO_PI, AngleProfile, CurveError, SampledCurve, resample, theta_grid

PRESET_NAMES = ("circle", "ellipse", "support_oval", "flower", "perturbed_circle")


def _uniform(points: np.ndarray, n: int) -> SampledCurve:
    # oversample, then redistribute by arclength
    return resample(SampledCurve(points), n)


def circle(R: float = 1.0, n: int = 256, center=(0.0, 0.0), representation: str = "polygon"):
    if not R > 0:
        raise ValueError("circle radius must be positive")
    if representation == "profile":
        anchor = np.asarray(center, dtype=float) + (0.0, -R)
        return AngleProfile(np.full(n, 1.0 / R), anchor)
    t = TWO_PI * np.arange(n) / n
    c = np.asarray(center, dtype=float)
    return SampledCurve(c + R * np.stack([np.cos(t), np.sin(t)], axis=1))


def ellipse_radius_of_curvature(theta, a: float, b: float) -> np.ndarray:
    """``1/k`` of the ellipse ``x^2/a^2 + y^2/b^2 = 1`` at tangent angle ``theta``."""
    th = np.asarray(theta, dtype=float)
    return (a * a * b * b) / (a * a * np.sin(th) ** 2 + b * b * np.cos(th) ** 2) ** 1.5


def ellipse(a: float = 2.0, b: float = 1.0, n: int = 256, center=(0.0, 0.0), representation: str = "polygon"):
    """Axis-aligned ellipse with semi-axes ``a`` (x) and ``b`` (y)."""
    if not (a > 0 and b > 0):
        raise ValueError("ellipse semi-axes must be positive")
    c = np.asarray(center, dtype=float)
    if representation == "profile":
        radius = ellipse_radius_of_curvature(theta_grid(n), a, b)
        return AngleProfile(1.0 / radius, c + (0.0, -b))
    t = TWO_PI * np.arange(8 * n) / (8 * n)
    pts = c + np.stack([a * np.cos(t), b * np.sin(t)], axis=1)
    return _uniform(pts, n)


def _support_modes(coeffs) -> list[tuple[int, float]]:
    if isinstance(coeffs, dict):
        return sorted((int(k), float(v)) for k, v in coeffs.items())
    return [(i + 1, float(v)) for i, v in enumerate(coeffs)]


def support_oval(a: float = 2.0, coeffs=(0.0, 0.2), n: int = 256, representation: str = "profile"):
    """Convex oval with support function ``h(v) = a + sum b_n cos(n v)``.

    ``v`` is the outward normal angle.  ``coeffs`` lists ``b_1, b_2, ...`` or
    maps mode numbers to amplitudes.  The radius of curvature
    ``h + h_vv = a + sum b_n (1 - n^2) cos(n v)`` must stay positive.

    Raises
    ------
    CurveError
        If the radius of curvature is not positive everywhere.
    """
    modes = _support_modes(coeffs)
    fine = theta_grid(4096)
    radius_fine = a + sum(bn * (1 - m * m) * np.cos(m * fine) for m, bn in modes)
    if radius_fine.min() <= 0:
        raise CurveError("support_oval parameters give a non-convex curve (h + h'' <= 0)")
    if representation == "profile":
        th = theta_grid(n)
        v = th - 0.5 * np.pi
        radius = a + sum(bn * (1 - m * m) * np.cos(m * v) for m, bn in modes)
        v0 = -0.5 * np.pi
        h0 = a + sum(bn * math.cos(m * v0) for m, bn in modes)
        dh0 = -sum(bn * m * math.sin(m * v0) for m, bn in modes)
        anchor = h0 * np.array([0.0, -1.0]) + dh0 * np.array([1.0, 0.0])
        return AngleProfile(1.0 / radius, anchor)
    v = TWO_PI * np.arange(8 * n) / (8 * n)
    h = a + sum(bn * np.cos(m * v) for m, bn in modes)
    dh = -sum(bn * m * np.sin(m * v) for m, bn in modes)
    normal = np.stack([np.cos(v), np.sin(v)], axis=1)
    along = np.stack([-np.sin(v), np.cos(v)], axis=1)
    return _uniform(h[:, None] * normal + dh[:, None] * along, n)


def flower_convexity_limit(modes: int) -> float:
    """Largest ``amp / R`` for which ``r = R + amp cos(m phi)`` stays convex."""
    return 1.0 / (1.0 + modes * modes)


def flower(R: float = 1.0, amp: float = 0.3, modes: int = 3, n: int = 256, representation: str = "polygon"):
    """Polar graph ``r(phi) = R + amp cos(modes phi)``; non-convex when
    ``amp / R > 1 / (1 + modes^2)``."""
    if not (R > 0 and 0 <= amp < R):
        raise ValueError("flower needs R > 0 and 0 <= amp < R")
    phi = TWO_PI * np.arange(16 * n) / (16 * n)
    r = R + amp * np.cos(modes * phi)
    curve = _uniform(np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1), n)
    if representation == "profile":
        from .curve import profile_from_curve

        return profile_from_curve(curve, n)
    return curve


def perturbed_circle(
    R: float = 1.0, noise: float = 0.02, max_mode: int = 6, seed: int = 0, n: int = 256, representation: str = "polygon"
):
    """Circle with random low-mode radial perturbation (reproducible by seed)."""
    rng = np.random.default_rng(seed)
    amps = noise * rng.standard_normal((max_mode - 1, 2)) / np.arange(2, max_mode + 1)[:, None]
    phi = TWO_PI * np.arange(16 * n) / (16 * n)
    r = R * np.ones_like(phi)
    for j, (ca, sa) in enumerate(amps, start=2):
        r += R * (ca * np.cos(j * phi) + sa * np.sin(j * phi))
    if r.min() <= 0:
        raise CurveError("perturbation too large")
    curve = _uniform(np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1), n)
    if representation == "profile":
        from .curve import profile_from_curve

        return profile_from_curve(curve, n)
    return curve


_BUILDERS = {
    "circle": circle,
    "ellipse": ellipse,
    "support_oval": support_oval,
    "flower": flower,
    "perturbed_circle": perturbed_circle,
}


def preset(name: str, params: dict[str, Any] | None = None, n: int = 256, representation: str | None = None):
    """Build a named initial curve.

    ``representation`` is ``'polygon'`` or ``'profile'`` (tangent-angle
    curvature); each preset has its own default.
    """
    if name not in _BUILDERS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    kwargs = dict(params or {})
    kwargs["n"] = n
    if representation is not None:
        if representation not in ("polygon", "profile"):
            raise ValueError("representation must be 'polygon' or 'profile'")
        kwargs["representation"] = representation
    try:
        return _BUILDERS[name](**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for preset {name!r}: {exc}") from exc

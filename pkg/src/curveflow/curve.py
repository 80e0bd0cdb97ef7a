"""Closed plane curves: polygon and tangent-angle representations.

A :class:`SampledCurve` is a closed polygon whose vertices sample a smooth
curve.  Curvature lives on vertices and is the turning angle divided by the
dual (average adjacent edge) length, so ``sum(k * ds) == 2*pi*winding``
holds to rounding.

An :class:`AngleProfile` stores the curvature of a strictly convex curve on a
uniform grid of the tangent angle ``theta`` (angle between the unit tangent
and the x-axis, counter-clockwise traversal).  The ``anchor`` is the position
of the point with ``theta = 0``; reconstruction places the rest of the curve
relative to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

TWO_PI = 2.0 * np.pi

#: relative closure tolerance, scaled by mean radius of curvature
CLOSURE_RTOL = 1e-6
MIN_POINTS = 8
MIN_PROFILE = 16


class CurveError(ValueError):
    """Raised for invalid curve data or violated operation preconditions."""


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def shift_next(a: np.ndarray) -> np.ndarray:
    """``a[i+1]`` with periodic wrap (cheaper than ``np.roll``)."""
    return np.concatenate((a[1:], a[:1]))


def shift_prev(a: np.ndarray) -> np.ndarray:
    """``a[i-1]`` with periodic wrap."""
    return np.concatenate((a[-1:], a[:-1]))


@dataclass(frozen=True)
class SampledCurve:
    """Closed polygon with ``N >= 8`` distinct consecutive vertices."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError(f"points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < MIN_POINTS:
            raise CurveError(f"need at least {MIN_POINTS} points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise CurveError("points contain NaN or Inf")
        edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if edges.min() <= 0.0:
            raise CurveError("consecutive points coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def trusted(cls, points: np.ndarray) -> "SampledCurve":
        """Wrap an (N, 2) float array without validation (solver internals)."""
        obj = object.__new__(cls)
        points.setflags(write=False)
        object.__setattr__(obj, "points", points)
        return obj

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "SampledCurve":
        c = np.asarray(center, dtype=float)
        return SampledCurve(c + factor * (self.points - c))

    def translated(self, offset) -> "SampledCurve":
        return SampledCurve(self.points + np.asarray(offset, dtype=float))

    def reversed(self) -> "SampledCurve":
        return SampledCurve(self.points[::-1])


@dataclass(frozen=True)
class CurveGeometry:
    """Discrete Frenet data of a :class:`SampledCurve`.

    ``edge_lengths[i]`` is ``|p[i+1] - p[i]|``; ``vertex_lengths[i]`` is the
    dual length ``(edge[i-1] + edge[i]) / 2`` used as the quadrature weight of
    vertex ``i``.  Tangents bisect the adjacent edge directions and normals
    are ``rot90(tangent)`` (inward for counter-clockwise curves).
    """

    points: np.ndarray
    edge_lengths: np.ndarray
    edge_tangents: np.ndarray
    vertex_lengths: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    turning: np.ndarray
    curvature: np.ndarray
    length: float
    area: float
    winding: int

    @property
    def is_convex(self) -> bool:
        return bool(self.curvature.min() > 0.0)

    def integrate(self, values) -> float:
        """Vertex quadrature of ``values`` against arclength."""
        return float(np.sum(np.asarray(values) * self.vertex_lengths))

    def int_k2(self) -> float:
        return self.integrate(self.curvature**2)

    def ks(self) -> np.ndarray:
        """Arclength derivative of curvature on edges (edge i joins i, i+1)."""
        return (shift_next(self.curvature) - self.curvature) / self.edge_lengths

    def ks_norm2(self) -> float:
        """``||k_s||_2^2`` with edge-midpoint quadrature."""
        return float(np.sum(self.ks() ** 2 * self.edge_lengths))

    def tangent_angles(self) -> np.ndarray:
        """Unwrapped tangent angle at each vertex (bisector direction)."""
        t0 = np.arctan2(self.edge_tangents[-1, 1], self.edge_tangents[-1, 0])
        edge_angles = t0 + np.cumsum(self.turning)
        return edge_angles - 0.5 * self.turning

    def centroid(self) -> np.ndarray:
        return area_centroid(self.points)

    def convexity(self) -> str:
        """``'convex'``, ``'degenerate-convex'`` or ``'nonconvex'``."""
        kmin = self.curvature.min()
        band = 1e-10 / self.length
        if kmin > band:
            return "convex"
        if kmin > -band:
            return "degenerate-convex"
        return "nonconvex"


def area_centroid(points: np.ndarray) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    a = 0.5 * cross.sum()
    cx = np.sum((p[:, 0] + q[:, 0]) * cross) / (6.0 * a)
    cy = np.sum((p[:, 1] + q[:, 1]) * cross) / (6.0 * a)
    return np.array([cx, cy])


def geometry(curve: SampledCurve) -> CurveGeometry:
    """Discrete geometry of a closed polygon.

    Raises
    ------
    CurveError
        If an edge is shorter than ``1e-14 * L``.
    """
    p = curve.points
    if p.shape[0] < MIN_POINTS:
        raise CurveError(f"need at least {MIN_POINTS} points")
    q = shift_next(p)
    e = q - p
    elen = np.hypot(e[:, 0], e[:, 1])
    total = float(elen.sum())
    if not elen.min() >= 1e-14 * total:
        raise CurveError("degenerate edge")
    t = e / elen[:, None]
    t_prev = shift_prev(t)
    cross = t_prev[:, 0] * t[:, 1] - t_prev[:, 1] * t[:, 0]
    dot = t_prev[:, 0] * t[:, 0] + t_prev[:, 1] * t[:, 1]
    turning = np.arctan2(cross, dot)
    dual = 0.5 * (shift_prev(elen) + elen)
    bis = t_prev + t
    bnorm = np.hypot(bis[:, 0], bis[:, 1])
    cusp = bnorm < 1e-12
    bnorm[cusp] = 1.0
    tau = bis / bnorm[:, None]
    tau[cusp] = t[cusp]
    area = 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))
    winding = int(np.rint(turning.sum() / TWO_PI))
    return CurveGeometry(
        points=p,
        edge_lengths=elen,
        edge_tangents=t,
        vertex_lengths=dual,
        tangents=tau,
        normals=_rot90(tau),
        turning=turning,
        curvature=turning / dual,
        length=total,
        area=area,
        winding=winding,
    )


def energy(curve, sigma1: float, sigma2: float) -> float:
    """``E = sigma1 * L + sigma2 * A``; accepts a curve, geometry or profile."""
    length, area = length_area(curve)
    return sigma1 * length + sigma2 * area


def length_area(obj) -> tuple[float, float]:
    if isinstance(obj, AngleProfile):
        return obj.length(), obj.area()
    g = obj if isinstance(obj, CurveGeometry) else geometry(obj)
    return g.length, g.area


def roundness(obj) -> tuple[float, float]:
    """``(k_max / k_min, L**2 / (4 pi A))``; both equal 1 on circles.

    ``k_max / k_min`` is ``inf`` when the curve is not strictly convex.
    """
    if isinstance(obj, AngleProfile):
        k = obj.k
        length, area = obj.length(), obj.area()
    else:
        g = obj if isinstance(obj, CurveGeometry) else geometry(obj)
        k, length, area = g.curvature, g.length, g.area
    if area <= 0:
        raise CurveError("roundness needs positive enclosed area")
    kmin = k.min()
    ratio = k.max() / kmin if kmin > 0 else np.inf
    return float(ratio), float(length**2 / (4.0 * np.pi * area))


def resample(curve: SampledCurve, n: int | None = None) -> SampledCurve:
    """Equal-arclength resampling through a periodic cubic spline.

    The spline interpolates the vertices against cumulative chord length;
    its arclength is tabulated with Gauss-Legendre quadrature per segment and
    inverted to place ``n`` points at equal spacing, starting at vertex 0.
    """
    n = len(curve) if n is None else int(n)
    if n < MIN_POINTS:
        raise CurveError(f"resample needs n >= {MIN_POINTS}")
    spline, u = _closed_spline(curve.points)
    deriv = spline.derivative()
    nodes, weights = np.polynomial.legendre.leggauss(8)
    a, b = u[:-1], u[1:]
    half = 0.5 * (b - a)
    xs = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    speed = np.linalg.norm(deriv(xs.ravel()), axis=1).reshape(xs.shape)
    seg_len = half * (speed @ weights)
    s_knots = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = s_knots[-1]
    targets = np.arange(n) * (total / n)
    # invert s(u): locate segment, then Newton on the spline arclength
    idx = np.clip(np.searchsorted(s_knots, targets, side="right") - 1, 0, len(a) - 1)
    frac = (targets - s_knots[idx]) / seg_len[idx]
    uu = a[idx] + frac * (b[idx] - a[idx])
    for _ in range(8):
        s_now = s_knots[idx] + _partial_arclength(deriv, a[idx], uu, nodes, weights)
        miss = s_now - targets
        if np.abs(miss).max() < 1e-14 * total:
            break
        d = deriv(uu)
        uu = np.clip(uu - miss / np.hypot(d[:, 0], d[:, 1]), a[idx], b[idx])
    return SampledCurve(spline(uu))


def _closed_spline(points: np.ndarray):
    """Periodic cubic spline through the vertices, chord-length parameter."""
    closed = np.vstack([points, points[:1]])
    chord = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    u = np.concatenate([[0.0], np.cumsum(chord)])
    return CubicSpline(u, closed, bc_type="periodic"), u


def _partial_arclength(deriv, lo, hi, nodes, weights):
    half = 0.5 * (hi - lo)
    xs = (0.5 * (lo + hi))[:, None] + half[:, None] * nodes[None, :]
    d = deriv(xs.ravel())
    speed = np.hypot(d[:, 0], d[:, 1]).reshape(xs.shape)
    return half * (speed @ weights)


# ---------------------------------------------------------------------------
# tangent-angle profiles


@dataclass(frozen=True)
class AngleProfile:
    """Curvature of a strictly convex curve on a uniform tangent-angle grid."""

    k: np.ndarray
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        k = np.array(self.k, dtype=float, copy=True)
        if k.ndim != 1 or k.size < MIN_PROFILE:
            raise CurveError(f"profile needs at least {MIN_PROFILE} samples")
        if not np.all(np.isfinite(k)):
            raise CurveError("profile contains NaN or Inf")
        if k.min() <= 0.0:
            raise CurveError("profile curvature must be strictly positive")
        anchor = np.array(self.anchor, dtype=float, copy=True).reshape(2)
        k.setflags(write=False)
        anchor.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "anchor", anchor)

    @classmethod
    def from_function(cls, func, m: int = 256, anchor=(0.0, 0.0)) -> "AngleProfile":
        return cls(func(theta_grid(m)), anchor)

    @property
    def m(self) -> int:
        return self.k.size

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.m)

    @property
    def h(self) -> float:
        return TWO_PI / self.m

    @property
    def radius(self) -> np.ndarray:
        """Radius of curvature ``1/k`` (``ds/dtheta``)."""
        return 1.0 / self.k

    def integrate(self, values) -> float:
        """Periodic trapezoid rule over ``[0, 2 pi)``."""
        return float(np.sum(values) * self.h)

    def length(self) -> float:
        return self.integrate(self.radius)

    def area(self) -> float:
        """Enclosed area from the Fourier modes of the radius of curvature.

        With ``h + h'' = 1/k`` the area ``(1/2) int (h^2 - h'^2)`` becomes
        ``pi * sum |r_n|^2 / (1 - n^2)`` over modes ``n != +-1``.
        """
        r = np.fft.fft(self.radius) / self.m
        n = np.fft.fftfreq(self.m, d=1.0 / self.m)
        keep = np.abs(n) != 1
        return float(np.pi * np.sum(np.abs(r[keep]) ** 2 / (1.0 - n[keep] ** 2)))

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "AngleProfile":
        c = np.asarray(center, dtype=float)
        return AngleProfile(self.k / factor, c + factor * (self.anchor - c))

    def translated(self, offset) -> "AngleProfile":
        return AngleProfile(self.k, self.anchor + np.asarray(offset, dtype=float))


def theta_grid(m: int) -> np.ndarray:
    return np.arange(m) * (TWO_PI / m)


def closure_residual(profile: AngleProfile) -> tuple[float, float]:
    """``(int cos/k, int sin/k)`` over one period; zero iff the curve closes."""
    r = profile.radius
    th = profile.theta
    return profile.integrate(np.cos(th) * r), profile.integrate(np.sin(th) * r)


def closure_tolerance(profile: AngleProfile, rtol: float = CLOSURE_RTOL) -> float:
    return rtol * float(np.mean(profile.radius))


def reconstruct_points(profile: AngleProfile, check: bool = True) -> np.ndarray:
    """Positions ``anchor + int_0^theta (cos, sin)/k`` on the theta grid.

    The integral is done mode by mode on the Fourier series of
    ``e^{i theta}/k``, dropping the mean (which is the closure residual).
    """
    if check:
        cx, cy = closure_residual(profile)
        tol = closure_tolerance(profile)
        if max(abs(cx), abs(cy)) > tol:
            raise CurveError(
                f"profile does not close: residual ({cx:.3e}, {cy:.3e}) exceeds {tol:.3e}"
            )
    m = profile.m
    th = profile.theta
    g = np.exp(1j * th) * profile.radius
    c = np.fft.fft(g) / m
    n = np.fft.fftfreq(m, d=1.0 / m)
    coef = np.zeros(m, dtype=complex)
    nz = n != 0
    coef[nz] = c[nz] / (1j * n[nz])
    z = m * np.fft.ifft(coef)
    z = z - z[0]
    return np.stack([z.real, z.imag], axis=1) + profile.anchor


def reconstruct_from_curvature(profile: AngleProfile, check: bool = True) -> SampledCurve:
    """Polygon through the curve points at the grid angles.

    The point with ``theta = 0`` sits at ``profile.anchor`` (origin by
    default) with unit tangent ``(1, 0)``.

    Raises
    ------
    CurveError
        If the closure residual exceeds ``1e-6 * mean(1/k)``.
    """
    return SampledCurve(reconstruct_points(profile, check=check))


def profile_from_curve(curve: SampledCurve, m: int = 256) -> AngleProfile:
    """Interpolate vertex curvature of a convex polygon onto a theta grid.

    The radius of curvature ``1/k`` is interpolated linearly in tangent
    angle; the closure constraint is then restored by removing the first
    Fourier mode of the radius.  The anchor is the curve point whose
    tangent angle is zero (linear interpolation between vertices).
    """
    g = geometry(curve)
    if g.winding != 1 or not g.is_convex:
        raise CurveError("profile_from_curve needs a convex counter-clockwise curve")
    ang = g.tangent_angles()
    ang = ang - TWO_PI * np.floor(ang[0] / TWO_PI)
    order = np.argsort(np.mod(ang, TWO_PI))
    a_sorted = np.mod(ang, TWO_PI)[order]
    r_sorted = (1.0 / g.curvature)[order]
    th = theta_grid(m)
    radius = np.interp(th, a_sorted, r_sorted, period=TWO_PI)
    radius = _remove_first_mode(radius)
    pts = g.points[order]
    px = np.interp(0.0, a_sorted, pts[:, 0], period=TWO_PI)
    py = np.interp(0.0, a_sorted, pts[:, 1], period=TWO_PI)
    return AngleProfile(1.0 / radius, (px, py))


def _remove_first_mode(radius: np.ndarray) -> np.ndarray:
    th = theta_grid(radius.size)
    c = 2.0 * np.mean(radius * np.cos(th))
    s = 2.0 * np.mean(radius * np.sin(th))
    return radius - c * np.cos(th) - s * np.sin(th)


def as_curve(state) -> SampledCurve:
    """Polygon for either representation."""
    if isinstance(state, AngleProfile):
        return reconstruct_from_curvature(state, check=False)
    return state


def median_curvature(profile: AngleProfile) -> float:
    """Best window minimum over closed theta-windows of length pi.

    On the uniform grid each window holds ``M/2 + 1`` samples (``M`` even)
    or ``(M+1)/2`` samples (``M`` odd).
    """
    k = profile.k
    m = k.size
    width = m // 2 + 1
    k2 = np.concatenate([k, k[: width - 1]])
    starts = np.arange(m)
    return float(np.max(_range_min(k2, starts, starts + width - 1)))


def median_curvature_samples(theta, k) -> float:
    """Median curvature for samples at arbitrary (increasing mod 2 pi) angles.

    Each window ``[theta_i, theta_i + pi]`` contributes the minimum of ``k``
    over the samples it contains; the result is the best window.
    """
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    k = np.asarray(k, dtype=float)
    if np.any(np.diff(theta) < 0):
        order = np.argsort(theta, kind="stable")
        theta, k = theta[order], k[order]
    n = theta.size
    th2 = np.concatenate([theta, theta + TWO_PI])
    k2 = np.concatenate([k, k])
    eps = 1e-12
    ends = np.searchsorted(th2, theta + np.pi + eps, side="right") - 1
    starts = np.arange(n)
    return float(np.max(_range_min(k2, starts, ends)))


def _range_min(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inclusive range minima via a sparse table."""
    table = [values]
    span = 1
    while 2 * span <= values.size:
        prev = table[-1]
        table.append(np.minimum(prev[:-span], prev[span:]))
        span *= 2
    width = hi - lo + 1
    level = np.floor(np.log2(width)).astype(int)
    out = np.empty(lo.size)
    for lv in np.unique(level):
        sel = level == lv
        row = table[lv]
        out[sel] = np.minimum(row[lo[sel]], row[hi[sel] - (1 << lv) + 1])
    return out


def entropy_theta(profile: AngleProfile) -> float:
    """``int_0^{2 pi} log k dtheta`` (periodic trapezoid)."""
    return profile.integrate(np.log(profile.k))


def normalized_entropy(profile: AngleProfile) -> float:
    return entropy_theta(profile) / TWO_PI


def length_normalized_entropy(profile: AngleProfile) -> float:
    """``(1/L) int log k dtheta``, entropy per unit length."""
    return entropy_theta(profile) / profile.length()


def curve_entropy(g: CurveGeometry) -> float:
    """``int log k dtheta`` for a convex polygon (``dtheta`` = turning angle)."""
    if not g.is_convex:
        return float("nan")
    return float(np.sum(np.log(g.curvature) * g.turning))


@dataclass(frozen=True)
class SupportData:
    """Support function and width on a uniform normal-angle grid.

    ``h[j] = max_i <p_i - origin, (cos v_j, sin v_j)>`` with ``v`` the outward
    normal angle; ``w[j] = h(v_j) + h(v_j + pi)``.  ``inv_k[j]`` is the radius
    of curvature at normal angle ``v_j`` interpolated from the vertices.
    """

    angles: np.ndarray
    h: np.ndarray
    w: np.ndarray
    inv_k: np.ndarray
    origin: np.ndarray

    def identity_residual(self) -> np.ndarray:
        """``h + h_vv - 1/k`` with periodic second differences."""
        d = self.angles[1] - self.angles[0]
        hvv = (np.roll(self.h, -1) - 2 * self.h + np.roll(self.h, 1)) / d**2
        return self.h + hvv - self.inv_k


def support_and_width(curve: SampledCurve, m: int | None = None, origin=None) -> SupportData:
    """Support function and width of a convex polygon about its area centroid.

    The polygon is interpolated by a periodic cubic spline; for each normal
    angle the support point is the spline point whose tangent is orthogonal
    to the normal (Newton refinement from the best vertex).  ``inv_k`` is the
    spline radius of curvature at that point.  ``m`` defaults to ``N // 4``
    rounded to even (at least 16).
    """
    g = geometry(curve)
    if not g.is_convex or g.winding != 1:
        raise CurveError("support_and_width needs a convex counter-clockwise curve")
    if m is None:
        m = max(MIN_PROFILE, len(curve) // 4)
    if m % 2:
        m += 1
    o = g.centroid() if origin is None else np.asarray(origin, dtype=float)
    spline, u = _closed_spline(g.points - o)
    d1, d2 = spline.derivative(1), spline.derivative(2)
    v = theta_grid(m)
    dirs = np.stack([np.cos(v), np.sin(v)], axis=1)
    best = np.argmax((g.points - o) @ dirs.T, axis=0)
    uu = u[best]
    period = u[-1]
    for _ in range(30):
        f1 = np.sum(d1(uu) * dirs, axis=1)
        f2 = np.sum(d2(uu) * dirs, axis=1)
        step = np.where(f2 < 0, f1 / np.where(f2 < 0, f2, -1.0), 0.0)
        step = np.clip(step, -0.5 * np.diff(u).max(), 0.5 * np.diff(u).max())
        uu = np.mod(uu - step, period)
        if np.abs(step).max() < 1e-15 * period:
            break
    h = np.sum(spline(uu) * dirs, axis=1)
    w = h + np.roll(h, -m // 2)
    a, b = d1(uu), d2(uu)
    speed = np.hypot(a[:, 0], a[:, 1])
    inv_k = speed**3 / (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    return SupportData(angles=v, h=h, w=w, inv_k=inv_k, origin=o)


def width_entropy_ratio(curve: SampledCurve, m: int = 256) -> float:
    """``min w * exp(E)`` with ``E = (1/L) int log k dtheta``.

    No universal constant is asserted for a lower bound ``w >= C e^{-E}``;
    this is the empirical value of the best such ``C`` for one curve.
    """
    s = support_and_width(curve)
    ent = length_normalized_entropy(profile_from_curve(curve, m))
    return float(s.w.min() * math.exp(ent))

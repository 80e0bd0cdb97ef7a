"""Localized curvature concentration, critical radius and blowup windows.

The sharp concentration of a curve in the ball ``B(x, rho)`` is the product
of the length inside the ball and ``int k^2 ds`` inside the ball.  Both are
computed by exact clipping of polygon edges against the disk; the curvature
of vertex ``i`` is spread over the two half-edges adjacent to it, which
matches the vertex quadrature used everywhere else.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .curve import AngleProfile, SampledCurve, as_curve, geometry, median_curvature_samples, resample
from .flow import FlowParams, Trajectory, evolve

#: declared gradient constant of the smooth cutoff, |phi'| <= GRADIENT_CONSTANT / rho
GRADIENT_CONSTANT = 4.0
#: smallness level of the cutoff interpolation inequality
SMALLNESS = 1.0 / 16.0

_CHUNK = 1 << 21  # centers x segments evaluated per batch


@dataclass(frozen=True)
class CutoffSpec:
    center: tuple
    radius: float
    profile: str = "sharp"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cutoff radius must be positive")
        if self.profile not in ("sharp", "smooth"):
            raise ValueError("profile must be 'sharp' or 'smooth'")


def smooth_cutoff(r, rho: float) -> np.ndarray:
    """C^2 bump: 1 on ``[0, rho/2]``, 0 beyond ``rho``, quintic smoothstep between.

    The largest slope is ``3.75 / rho``.
    """
    u = np.clip(2.0 * (1.0 - np.asarray(r, dtype=float) / rho), 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def smooth_cutoff_slope(r, rho: float) -> np.ndarray:
    u = np.clip(2.0 * (1.0 - np.asarray(r, dtype=float) / rho), 0.0, 1.0)
    return -(2.0 / rho) * 30.0 * u**2 * (1.0 - u) ** 2


def _curve_data(curve):
    g = geometry(as_curve(curve))
    return g


def _clip_halves(p0, d, dlen2, centers, rho):
    """Lengths of the two halves of each segment inside the paired disk.

    All arguments are aligned pair arrays: segment start ``p0`` and
    direction ``d`` against ``centers``.
    """
    w = p0 - centers
    b = np.einsum("sk,sk->s", w, d)
    c = np.einsum("sk,sk->s", w, w) - rho * rho
    disc = b * b - dlen2 * c
    inside = disc > 0
    root = np.sqrt(np.where(inside, disc, 0.0))
    s1 = (-b - root) / dlen2
    s2 = (-b + root) / dlen2
    dlen = np.sqrt(dlen2)
    first = np.clip(np.minimum(s2, 0.5) - np.maximum(s1, 0.0), 0.0, None) * dlen
    second = np.clip(np.minimum(s2, 1.0) - np.maximum(s1, 0.5), 0.0, None) * dlen
    return np.where(inside, first, 0.0), np.where(inside, second, 0.0)


class _SegmentIndex:
    """Edges of a polygon with a k-d tree over edge midpoints."""

    def __init__(self, g):
        self.g = g
        self.p0 = g.points
        self.d = np.roll(self.p0, -1, axis=0) - self.p0
        self.dlen2 = np.einsum("sk,sk->s", self.d, self.d)
        self.half = 0.5 * float(np.sqrt(self.dlen2.max()))
        self.k2 = g.curvature**2
        self.k2_next = np.roll(self.k2, -1)
        self.tree = cKDTree(self.p0 + 0.5 * self.d)

    def batch(self, centers: np.ndarray, rho: float):
        """In-ball length and in-ball ``int k^2`` for many centers."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        lengths = np.zeros(centers.shape[0])
        masses = np.zeros(centers.shape[0])
        reach = rho + self.half * (1.0 + 1e-9)
        n_seg = self.p0.shape[0]
        step = max(1, _CHUNK // n_seg)
        for lo in range(0, centers.shape[0], step):
            block = centers[lo : lo + step]
            hits = self.tree.query_ball_point(block, reach, return_sorted=False)
            counts = np.fromiter((len(h) for h in hits), dtype=np.intp, count=len(hits))
            if counts.sum() == 0:
                continue
            seg = np.fromiter(itertools.chain.from_iterable(hits), dtype=np.intp, count=int(counts.sum()))
            owner = np.repeat(np.arange(block.shape[0]), counts)
            first, second = _clip_halves(self.p0[seg], self.d[seg], self.dlen2[seg], block[owner], rho)
            nb = block.shape[0]
            lengths[lo : lo + nb] = np.bincount(owner, first + second, minlength=nb)
            masses[lo : lo + nb] = np.bincount(owner, first * self.k2[seg] + second * self.k2_next[seg], minlength=nb)
        return lengths, masses


def _index(curve) -> _SegmentIndex:
    if isinstance(curve, _SegmentIndex):
        return curve
    g = curve if hasattr(curve, "vertex_lengths") else _curve_data(curve)
    return _SegmentIndex(g)


def local_concentration(curve, x, rho: float, profile: str = "sharp") -> float:
    """``L_B * int_B k^2 ds`` for ``B = B(x, rho)``.

    With ``profile='smooth'`` the weighted product ``L_{phi^4} * int k^2 phi^4 ds``
    is returned instead (see :func:`cutoff_integrals`).
    """
    CutoffSpec(tuple(np.asarray(x, dtype=float)), rho, profile)
    g = _curve_data(curve)
    if profile == "smooth":
        ci = cutoff_integrals(g, x, rho)
        return ci["L_phi4"] * ci["int_k2_phi4"]
    length, mass = _SegmentIndex(g).batch(np.asarray(x, dtype=float)[None, :], rho)
    return float(length[0] * mass[0])


def cutoff_integrals(curve, x, rho: float) -> dict:
    """Smooth-cutoff weighted integrals around ``x``.

    Keys: ``L_phi4``, ``int_k2_phi4``, ``int_k4_phi4``, ``int_ks2_phi4``.
    Vertex quantities use dual lengths, ``k_s`` lives on edge midpoints.
    """
    g = curve if hasattr(curve, "vertex_lengths") else _curve_data(curve)
    x = np.asarray(x, dtype=float)
    r_v = np.hypot(*(g.points - x).T)
    phi4_v = smooth_cutoff(r_v, rho) ** 4
    mids = 0.5 * (g.points + np.roll(g.points, -1, axis=0))
    phi4_e = smooth_cutoff(np.hypot(*(mids - x).T), rho) ** 4
    k = g.curvature
    w = g.vertex_lengths
    return {
        "L_phi4": float(np.sum(phi4_v * w)),
        "int_k2_phi4": float(np.sum(k**2 * phi4_v * w)),
        "int_k4_phi4": float(np.sum(k**4 * phi4_v * w)),
        "int_ks2_phi4": float(np.sum(g.ks() ** 2 * phi4_e * g.edge_lengths)),
    }


# ---------------------------------------------------------------------------
# supremum over centers


def _candidate_centers(g, rho: float, pitch_fraction: float = 0.25) -> np.ndarray:
    """Curve vertices plus bounding-box grid nodes that can see the curve."""
    pts = g.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pitch = pitch_fraction * rho
    shape = np.floor((hi - lo) / pitch).astype(int) + 1
    # sample the curve densely enough that every grid node within rho of the
    # curve lies within `reach` cells of some sample
    seg = np.roll(pts, -1, axis=0) - pts
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    sub = np.maximum(1, np.ceil(seg_len / pitch).astype(int))
    reps = np.repeat(np.arange(pts.shape[0]), sub)
    offs = np.concatenate([np.arange(s) / s for s in sub])
    samples = pts[reps] + offs[:, None] * seg[reps]
    cells = np.unique(np.floor((samples - lo) / pitch).astype(int), axis=0)
    reach = int(math.ceil(1.0 / pitch_fraction)) + 1
    span = np.arange(-reach, reach + 1)
    ox, oy = np.meshgrid(span, span, indexing="ij")
    offsets = np.stack([ox.ravel(), oy.ravel()], axis=1)
    near = (cells[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    near = near[(near >= 0).all(axis=1) & (near < shape).all(axis=1)]
    near = np.unique(near, axis=0)
    grid = lo + near * pitch
    return np.vstack([pts, grid])


def _refine(index, best_x, best_val, rho, rounds=40):
    """Deterministic compass search started from the best candidate."""
    x = np.array(best_x, dtype=float)
    val = best_val
    step = rho / 8.0
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    dirs[4:] /= math.sqrt(2.0)
    for _ in range(rounds):
        trial = x + step * dirs
        lengths, masses = index.batch(trial, rho)
        vals = lengths * masses
        j = int(np.argmax(vals))
        if vals[j] > val * (1.0 + 1e-12):
            x, val = trial[j], float(vals[j])
        else:
            step *= 0.5
    return x, val


def sup_concentration(curve, rho: float, refine: bool = True, pitch_fraction: float = 0.25):
    """``(eps, x*)``: the largest sharp concentration at radius ``rho``.

    Candidates are all vertices plus bounding-box grid nodes of pitch
    ``pitch_fraction * rho`` close enough to touch the curve; with ``refine``
    the best candidate is polished by a compass search (only improvements
    are accepted, so the result never drops below the candidate maximum).
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    index = _index(curve)
    centers = _candidate_centers(index.g, rho, pitch_fraction)
    lengths, masses = index.batch(centers, rho)
    vals = lengths * masses
    j = int(np.argmax(vals))
    best_x, best = centers[j], float(vals[j])
    if refine and best > 0:
        best_x, best = _refine(index, best_x, best, rho)
    return best, np.asarray(best_x, dtype=float)


@dataclass(frozen=True)
class CriticalRadius:
    radius: float
    center: np.ndarray
    unconstrained: bool
    eps_at_radius: float


def critical_radius(curve, eps1: float, rtol: float = 1e-12, refine: bool = True) -> CriticalRadius:
    """Largest ``rho`` with sharp concentration ``<= eps1`` everywhere.

    Bisection on ``[1e-6 L, 2 diam]``.  When the whole-curve product
    ``L int k^2`` does not exceed ``eps1`` the upper end is returned with
    ``unconstrained=True``.
    """
    if not eps1 > 0:
        raise ValueError("eps1 must be positive")
    index = _index(curve)
    g = index.g
    diam = _diameter(g.points)
    hi = 2.0 * diam
    if g.length * g.int_k2() <= eps1:
        eps, x = sup_concentration(index, hi, refine=refine)
        return CriticalRadius(hi, x, True, eps)
    lo = 1e-6 * g.length
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        eps, _ = sup_concentration(index, mid, refine=refine)
        if eps <= eps1:
            lo = mid
        else:
            hi = mid
    eps, x = sup_concentration(index, lo, refine=refine)
    return CriticalRadius(lo, x, False, eps)


def _diameter(points: np.ndarray) -> float:
    best = 0.0
    for lo in range(0, points.shape[0], 512):
        d = points[lo : lo + 512, None, :] - points[None, :, :]
        best = max(best, float(np.sqrt(np.max(np.einsum("abk,abk->ab", d, d)))))
    return best


# ---------------------------------------------------------------------------
# monitors


@dataclass
class LifespanReport:
    hypothesis_holds: bool
    eps0: float
    rho: float
    eps1: float
    times: np.ndarray
    eps_half: np.ndarray
    c0: float | None
    lower_bound: float | None
    T_est: float | None
    excluded_convex: int

    @property
    def consistent(self) -> bool | None:
        if self.lower_bound is None or self.T_est is None:
            return None
        return self.lower_bound <= self.T_est


def lifespan_monitor(traj: Trajectory, rho: float, eps1: float) -> LifespanReport:
    """Track the concentration at radius ``rho/2`` over non-convex snapshots.

    The growth constant is the smallest ``c0`` with
    ``eps_{rho/2}(t) <= eps_rho(0) + c0 t (1 + rho^-2) eps1`` on every
    monitored snapshot; the implied lifespan bound is ``rho^2 / c0``.
    """
    first = as_curve(traj.snapshots[0].state)
    eps0, _ = sup_concentration(first, rho)
    if eps0 > eps1:
        return LifespanReport(False, eps0, rho, eps1, np.array([]), np.array([]), None, None, traj.T_est, 0)
    times, vals = [], []
    excluded = 0
    for snap in traj.snapshots:
        curve = as_curve(snap.state)
        g = geometry(curve)
        if g.curvature.min() >= 0:
            excluded += 1
            continue
        eps, _ = sup_concentration(g, 0.5 * rho)
        times.append(snap.t)
        vals.append(eps)
    times = np.array(times)
    vals = np.array(vals)
    c0 = None
    bound = None
    later = times > 0
    if later.any():
        growth = (vals[later] - eps0) / (times[later] * (1.0 + rho**-2) * eps1)
        c0 = float(max(growth.max(), 0.0))
        bound = math.inf if c0 == 0 else rho**2 / c0
    return LifespanReport(True, eps0, rho, eps1, times, vals, c0, bound, traj.T_est, excluded)


@dataclass(frozen=True)
class CutoffMargins:
    lhs: float
    ks_term: float
    eps: float
    eps2_over_rho2: float
    empirical_c: float
    smallness_holds: bool


def cutoff_inequality_monitor(curve, x, rho: float) -> CutoffMargins:
    """Terms of ``L int k^4 phi^4 <= 1/2 L int k_s^2 phi^4 + c eps^2 / rho^2``.

    ``eps`` is the sharp concentration sup at radius ``rho``; the reported
    ``empirical_c`` is the smallest constant making the inequality hold.
    """
    g = _curve_data(curve)
    ci = cutoff_integrals(g, x, rho)
    lhs = ci["L_phi4"] * ci["int_k4_phi4"]
    ks = ci["L_phi4"] * ci["int_ks2_phi4"]
    eps, _ = sup_concentration(g, rho)
    scale = eps**2 / rho**2
    excess = lhs - 0.5 * ks
    if excess <= 0:
        c = 0.0
    elif scale > 0:
        c = excess / scale
    else:
        c = math.inf
    return CutoffMargins(lhs, ks, eps, scale, c, eps <= SMALLNESS)


# ---------------------------------------------------------------------------
# blowup


@dataclass
class BlowupWindow:
    t: float
    r_t: float
    x_t: np.ndarray
    v: np.ndarray
    curves: list[SampledCurve]
    additive_term: float
    velocity_mismatch: float
    median_k: float  # median curvature of the rescaled curve at v = 0
    concentration_unit_ball: float
    concentration_original: float
    additive_ratio: float
    self_intersections: list[int] = field(default_factory=list)


def _restart_state(traj: Trajectory, t: float):
    snaps = [s for s in traj.snapshots if s.t <= t]
    if not snaps:
        raise ValueError("no snapshot at or before the requested time")
    snap = snaps[-1]
    state = snap.state
    if isinstance(state, AngleProfile):
        pts = as_curve(state)
        state = resample(pts, max(256, state.m))
    return snap.t, state


def _advance_to(state, t0: float, targets, params: FlowParams, resample_enabled: bool):
    """Evolve a polygon from ``t0`` and collect states at the target times."""
    targets = [float(x) for x in targets]
    out = []
    pending = [x for x in targets if x > t0]
    out.extend(state for x in targets if x <= t0)
    if not pending:
        return out
    run_params = params.with_(t_cap=pending[-1] - t0, area_floor=0.0, snapshot_spacing=0.0, record_interval=1000000)
    traj = evolve(state, run_params, snapshot_times=[x - t0 for x in pending], resample_enabled=resample_enabled)
    if traj.termination != "t_cap":
        raise ValueError(f"window evolution stopped early ({traj.termination})")
    by_time = {round(s.t, 15): s.state for s in traj.snapshots}
    for x in pending:
        key = min(by_time, key=lambda tt: abs(tt - (x - t0)))
        if abs(key - (x - t0)) > 1e-12 * max(1.0, x):
            raise ValueError("window snapshot missing")
        out.append(by_time[key])
    return out


def count_self_intersections(points: np.ndarray) -> int:
    """Number of crossing pairs among non-adjacent polygon edges."""
    p = np.asarray(points)
    q = np.roll(p, -1, axis=0)
    n = p.shape[0]

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    count = 0
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        a, b = p[i], q[i]
        c, d = p[j], q[j]
        o1 = orient(a, b, c)
        o2 = orient(a, b, d)
        o3 = orient(c, d, a[None, :])
        o4 = orient(c, d, b[None, :])
        count += int(np.sum((o1 * o2 < 0) & (o3 * o4 < 0)))
    return count


def blowup_rescale(
    traj: Trajectory, t: float, eps1: float, v_max: float = 0.5, n_v: int = 6
) -> BlowupWindow:
    """Discrete blowup ``(gamma_{t + v r_t^2} - x_t) / r_t`` around time ``t``.

    The flow is re-run from the latest snapshot before ``t`` (profiles are
    converted to polygons) and, without vertex redistribution, through the
    window ``v in [0, v_max]``, so vertices correspond between frames.  The
    velocity mismatch is the largest deviation of ``d gamma / dv`` (frame
    differences) from the trapezoidal average of ``(sigma1 k + sigma2 r_t) nu``.

    Raises
    ------
    ValueError
        If ``t`` is outside the recorded range or the window evolution fails.
    """
    if not 0 <= t < traj.records[-1].t:
        raise ValueError("t must lie inside the recorded time range")
    params = traj.params
    t0, state = _restart_state(traj, t)
    (curve_t,) = _advance_to(state, t0, [t], params, True)
    crit = critical_radius(curve_t, eps1)
    r_t, x_t = crit.radius, crit.center
    v = np.linspace(0.0, v_max, n_v)
    frames = _advance_to(curve_t, t, t + v * r_t**2, params, False)
    curves = [SampledCurve((c.points - x_t) / r_t) for c in frames]
    extra = params.sigma2 * r_t
    mismatch = 0.0
    geos = [geometry(c) for c in curves]
    for j in range(len(curves) - 1):
        dv = v[j + 1] - v[j]
        vel = (curves[j + 1].points - curves[j].points) / dv
        a = (params.sigma1 * geos[j].curvature + extra)[:, None] * geos[j].normals
        b = (params.sigma1 * geos[j + 1].curvature + extra)[:, None] * geos[j + 1].normals
        mismatch = max(mismatch, float(np.max(np.hypot(*(vel - 0.5 * (a + b)).T))))
    g0 = geos[0]
    med = median_curvature_samples(g0.tangent_angles(), g0.curvature) if g0.is_convex else float(np.median(g0.curvature))
    unit = local_concentration(curves[0], np.zeros(2), 1.0)
    orig = local_concentration(curve_t, x_t, r_t)
    window = BlowupWindow(
        t=t,
        r_t=r_t,
        x_t=x_t,
        v=v,
        curves=curves,
        additive_term=extra,
        velocity_mismatch=mismatch,
        median_k=float(med),
        concentration_unit_ball=unit,
        concentration_original=orig,
        additive_ratio=extra / (params.sigma1 * float(med)) if med > 0 else math.inf,
        self_intersections=[count_self_intersections(c.points) for c in curves],
    )
    return window


def concentration_series(traj: Trajectory, rho: float, eps1: float, max_rows: int | None = 32) -> list[dict]:
    """Rows ``{t, rho, eps, xstar, r_crit}`` for up to ``max_rows`` evenly
    spaced snapshots (all of them when ``max_rows`` is None)."""
    snaps = traj.snapshots
    if max_rows is not None and len(snaps) > max_rows:
        picks = np.unique(np.linspace(0, len(snaps) - 1, max_rows).round().astype(int))
        snaps = [snaps[i] for i in picks]
    rows = []
    for snap in snaps:
        curve = as_curve(snap.state)
        eps, x = sup_concentration(curve, rho)
        crit = critical_radius(curve, eps1, rtol=1e-8)
        rows.append({"t": snap.t, "rho": rho, "eps": eps, "xstar": x.tolist(), "r_crit": crit.radius})
    return rows

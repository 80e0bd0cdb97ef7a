"""Time evolution under the normal velocity ``F = sigma1 * k + sigma2``.

Two solvers share one driver:

* the polygon solver moves each vertex along its bisector normal with
  explicit Euler steps and periodically redistributes vertices by arclength;
* the tangent-angle solver evolves the curvature profile of a convex curve
  with ``k_t = sigma1 k^2 k_thth + sigma1 k^3 + sigma2 k^2``, treating the
  diffusion implicitly with frozen coefficient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .curve import (
    TWO_PI,
    AngleProfile,
    CurveError,
    CurveGeometry,
    SampledCurve,
    _remove_first_mode,
    curve_entropy,
    entropy_theta,
    geometry,
    median_curvature,
    median_curvature_samples,
    reconstruct_points,
    resample,
    shift_next,
    shift_prev,
)
from .tridiag import solve_periodic_tridiagonal

log = logging.getLogger(__name__)

TERMINATION_REASONS = ("area_floor", "k_cap", "t_cap", "step_failure", "max_steps")


class StepFailure(RuntimeError):
    """A single time step produced an invalid state."""


@dataclass(frozen=True)
class FlowParams:
    """Flow coefficients and solver policy.

    ``area_floor`` and ``k_cap`` are absolute; when left as ``None`` they
    default to ``area_floor_fraction * A0`` and ``k_cap_factor / L0``.
    ``theta_step`` bounds the relative curvature change per step of the
    tangent-angle solver: ``dt = theta_step / max(sigma1 k^2 + sigma2 k)``.
    """

    sigma1: float = 1.0
    sigma2: float = 1.0
    cfl_factor: float = 0.8
    resample_interval: int = 20
    area_floor: float | None = None
    area_floor_fraction: float = 1e-3
    k_cap: float | None = None
    k_cap_factor: float = 1e4
    t_cap: float = math.inf
    max_steps: int = 5_000_000
    max_halvings: int = 8
    theta_step: float = 5e-4
    theta_scheme: str = "euler"
    record_interval: int = 1
    snapshot_spacing: float = 0.05
    enforce_closure: bool = True

    def __post_init__(self):
        if not self.sigma1 > 0:
            raise ValueError("sigma1 must be positive")
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")
        if not 0 < self.cfl_factor <= 1:
            raise ValueError("cfl_factor must lie in (0, 1]")
        if self.resample_interval < 1 or self.record_interval < 1:
            raise ValueError("intervals must be positive")
        if not self.theta_step > 0:
            raise ValueError("theta_step must be positive")
        if self.theta_scheme not in ("euler", "midpoint"):
            raise ValueError("theta_scheme must be 'euler' or 'midpoint'")

    def with_(self, **changes) -> "FlowParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["t_cap"]):
            d["t_cap"] = None
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "FlowParams":
        data = dict(data)
        if data.get("t_cap") is None:
            data.pop("t_cap", None)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown flow parameters: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    L: float
    A: float
    omega: int
    E: float
    k_min: float
    k_max: float
    int_k2: float
    int_F2: float
    ks_norm2: float
    entropy: float
    median_k: float | None
    k_ratio: float
    iso_ratio: float
    step: int = 0
    segment: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, float) and not math.isfinite(value):
                d[key] = None
        return d


@dataclass
class Snapshot:
    t: float
    state: SampledCurve | AngleProfile
    step: int = 0


@dataclass
class Trajectory:
    params: FlowParams
    kind: str
    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    termination: str | None = None
    T_est: float | None = None
    area_floor: float = 0.0
    k_cap: float = math.inf

    def series(self, name: str) -> np.ndarray:
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records],
            dtype=float,
        )

    @property
    def initial(self):
        return self.snapshots[0].state

    @property
    def final(self):
        return self.snapshots[-1].state

    def set_termination(self, reason: str) -> None:
        if self.termination is not None:
            raise RuntimeError("termination reason already set")
        if reason not in TERMINATION_REASONS:
            raise ValueError(reason)
        self.termination = reason


# ---------------------------------------------------------------------------
# diagnostics


def speed(k, params: FlowParams):
    return params.sigma1 * np.asarray(k) + params.sigma2


def polygon_record(g: CurveGeometry, params: FlowParams, t: float, step=0, segment=0):
    k = g.curvature
    F = speed(k, params)
    convex = g.is_convex and g.winding == 1
    kmin, kmax = float(k.min()), float(k.max())
    if convex:
        med = median_curvature_samples(g.tangent_angles(), k)
        ent = curve_entropy(g)
        ratio = kmax / kmin
    else:
        med, ent, ratio = None, float("nan"), float("inf")
    iso = g.length**2 / (4 * np.pi * g.area) if g.area > 0 else float("inf")
    return DiagnosticsRecord(
        t=float(t),
        L=g.length,
        A=g.area,
        omega=g.winding,
        E=params.sigma1 * g.length + params.sigma2 * g.area,
        k_min=kmin,
        k_max=kmax,
        int_k2=g.int_k2(),
        int_F2=g.integrate(F**2),
        ks_norm2=g.ks_norm2(),
        entropy=ent,
        median_k=med,
        k_ratio=ratio,
        iso_ratio=iso,
        step=step,
        segment=segment,
    )


def central_diff(values: np.ndarray, h: float) -> np.ndarray:
    return (shift_next(values) - shift_prev(values)) / (2.0 * h)


def second_diff(values: np.ndarray, h: float) -> np.ndarray:
    return (shift_next(values) - 2.0 * values + shift_prev(values)) / h**2


def profile_record(p: AngleProfile, params: FlowParams, t: float, step=0, segment=0):
    k = p.k
    F = speed(k, params)
    length, area = p.length(), p.area()
    kt = central_diff(k, p.h)
    kmin, kmax = float(k.min()), float(k.max())
    return DiagnosticsRecord(
        t=float(t),
        L=length,
        A=area,
        omega=1,
        E=params.sigma1 * length + params.sigma2 * area,
        k_min=kmin,
        k_max=kmax,
        int_k2=p.integrate(k),
        int_F2=p.integrate(F**2 / k),
        ks_norm2=p.integrate(kt**2 * k),
        entropy=entropy_theta(p),
        median_k=median_curvature(p),
        k_ratio=kmax / kmin,
        iso_ratio=length**2 / (4 * np.pi * area),
        step=step,
        segment=segment,
    )


def record_for(state, params: FlowParams, t: float = 0.0) -> DiagnosticsRecord:
    if isinstance(state, AngleProfile):
        return profile_record(state, params, t)
    return polygon_record(geometry(state), params, t)


# ---------------------------------------------------------------------------
# single steps


def polygon_dt(g: CurveGeometry, params: FlowParams) -> float:
    """Explicit parabolic limit, also capped so no vertex moves > edge/4."""
    emin = float(g.edge_lengths.min())
    dt = params.cfl_factor * emin**2 / (2.0 * params.sigma1)
    fmax = float(np.abs(speed(g.curvature, params)).max())
    if fmax > 0:
        dt = min(dt, 0.25 * emin / fmax)
    return dt


def _advance_polygon(g: CurveGeometry, params: FlowParams, dt: float) -> SampledCurve:
    F = speed(g.curvature, params)
    pts = g.points + dt * F[:, None] * g.normals
    if not np.isfinite(pts).all():
        raise StepFailure("non-finite coordinates")
    return SampledCurve.trusted(pts)


def step_polygon(curve: SampledCurve, params: FlowParams, dt: float) -> SampledCurve:
    """One explicit Euler step: vertex ``i`` moves by ``F_i nu_i dt``.

    Raises
    ------
    StepFailure
        If the new polygon is degenerate or its winding number changed.
    """
    g = geometry(curve)
    new = _advance_polygon(g, params, dt)
    try:
        gn = geometry(new)
    except CurveError as exc:
        raise StepFailure(str(exc)) from exc
    if gn.winding != g.winding:
        raise StepFailure("winding number changed")
    return new


def theta_dt(profile: AngleProfile, params: FlowParams) -> float:
    """Step size of the tangent-angle solver.

    The midpoint scheme is additionally limited to ``dt sigma1 k^2 <= 0.9 h^2``
    so its explicit half of the diffusion keeps the minimum principle.
    """
    k = profile.k
    dt = params.theta_step / float(np.max(params.sigma1 * k**2 + params.sigma2 * k))
    if params.theta_scheme == "midpoint":
        dt = min(dt, 0.9 * profile.h**2 / (params.sigma1 * float(k.max()) ** 2))
    return dt


def _anchor_velocity(k: np.ndarray, h: float, params: FlowParams) -> np.ndarray:
    # point with tangent angle 0 moves with F nu - F_theta tau, tau=(1,0), nu=(0,1)
    F0 = params.sigma1 * k[0] + params.sigma2
    F_theta0 = params.sigma1 * (k[1] - k[-1]) / (2.0 * h)
    return np.array([-F_theta0, F0])


def _reaction(k: np.ndarray, params: FlowParams) -> np.ndarray:
    return params.sigma1 * k**3 + params.sigma2 * k**2


def _implicit_diffusion(k_frozen, rhs, dt, h, params, weight=1.0):
    c = weight * dt * params.sigma1 * k_frozen**2 / h**2
    return solve_periodic_tridiagonal(-c, 1.0 + 2.0 * c, -c, rhs)


def step_theta(profile: AngleProfile, params: FlowParams, dt: float) -> AngleProfile:
    """Semi-implicit step of the curvature profile.

    ``euler`` solves ``(I - dt sigma1 diag(k^2) D2) k_new = k + dt (sigma1 k^3 + sigma2 k^2)``
    with the periodic second difference ``D2``; the matrix is an M-matrix,
    so ``min k`` cannot decrease.  ``midpoint`` takes such a half step to
    freeze coefficients and reaction at the midpoint, then applies a
    Crank-Nicolson update (second order in time).  With ``enforce_closure``
    the first Fourier mode of ``1/k`` is removed afterwards.  The anchor
    follows its point with a trapezoidal (Heun) update.

    Raises
    ------
    StepFailure
        If the update produces a non-positive or non-finite sample.
    """
    k = profile.k
    h = profile.h
    if params.theta_scheme == "midpoint":
        k_mid = _implicit_diffusion(k, k + 0.5 * dt * _reaction(k, params), 0.5 * dt, h, params)
        c = 0.5 * dt * params.sigma1 * k_mid**2 / h**2
        rhs = k + c * (shift_next(k) - 2.0 * k + shift_prev(k)) + dt * _reaction(k_mid, params)
        k_new = _implicit_diffusion(k_mid, rhs, dt, h, params, weight=0.5)
    else:
        k_new = _implicit_diffusion(k, k + dt * _reaction(k, params), dt, h, params)
    if not np.all(np.isfinite(k_new)) or k_new.min() <= 0:
        raise StepFailure("curvature lost positivity")
    if params.enforce_closure:
        radius = _remove_first_mode(1.0 / k_new)
        if radius.min() <= 0:
            raise StepFailure("closure projection lost positivity")
        k_new = 1.0 / radius
    v0 = _anchor_velocity(k, h, params)
    v1 = _anchor_velocity(k_new, h, params)
    anchor = profile.anchor + 0.5 * dt * (v0 + v1)
    return AngleProfile(k_new, anchor)


# ---------------------------------------------------------------------------
# driver


class _SnapshotPolicy:
    """Snapshots whenever log(A0/A) crosses a multiple of ``spacing``,
    plus explicitly requested times (which the stepper lands on exactly)."""

    def __init__(self, area0: float, spacing: float, times: Sequence[float] | None):
        self.area0 = area0
        self.spacing = spacing
        self.next_level = spacing
        self.times = sorted(float(x) for x in (times or []) if x > 0)

    def clip_dt(self, t: float, dt: float) -> float:
        while self.times and self.times[0] <= t:
            self.times.pop(0)
        if self.times and t + dt >= self.times[0]:
            return self.times[0] - t
        return dt

    def due(self, t: float, area: float) -> bool:
        hit = False
        if self.times and abs(t - self.times[0]) <= 1e-14 * max(1.0, abs(t)):
            self.times.pop(0)
            hit = True
        if area > 0 and self.spacing > 0:
            level = math.log(self.area0 / area)
            if level >= self.next_level:
                while self.next_level <= level:
                    self.next_level += self.spacing
                hit = True
        return hit


def evolve(
    initial: SampledCurve | AngleProfile,
    params: FlowParams,
    snapshot_times: Sequence[float] | None = None,
    resample_enabled: bool = True,
) -> Trajectory:
    """Run the flow until a stop condition.

    Polygons use the explicit solver, angle profiles the semi-implicit
    tangent-angle solver.  Diagnostics are recorded every
    ``record_interval`` accepted steps (and always at the first and last
    state).  Stops on ``area_floor``, ``k_cap``, ``t_cap``, repeated step
    failure or ``max_steps``; ``T_est`` is filled for ``area_floor`` stops.

    Raises
    ------
    CurveError
        If an initial profile does not close.
    """
    is_profile = isinstance(initial, AngleProfile)
    kind = "theta" if is_profile else "polygon"
    if is_profile:
        reconstruct_points(initial)  # raises CurveError on a closure failure
    rec0 = record_for(initial, params, 0.0)
    area_floor = params.area_floor if params.area_floor is not None else params.area_floor_fraction * rec0.A
    k_cap = params.k_cap if params.k_cap is not None else params.k_cap_factor / rec0.L
    traj = Trajectory(params=params, kind=kind, area_floor=area_floor, k_cap=k_cap)
    traj.records.append(rec0)
    traj.snapshots.append(Snapshot(0.0, initial, 0))
    if rec0.A <= area_floor:
        traj.set_termination("area_floor")
        return traj
    policy = _SnapshotPolicy(rec0.A, params.snapshot_spacing, snapshot_times)
    omega0 = rec0.omega

    def make_record(t_now, step_now, segment_now):
        if is_profile:
            return profile_record(state, params, t_now, step_now, segment_now)
        return polygon_record(g, params, t_now, step_now, segment_now)

    state = initial
    g = None if is_profile else geometry(initial)
    t = 0.0
    step = 0
    segment = 0
    last_recorded = 0
    while True:
        dt = theta_dt(state, params) if is_profile else polygon_dt(g, params)
        if math.isfinite(params.t_cap):
            dt = min(dt, params.t_cap - t)
        dt = policy.clip_dt(t, dt)
        new = None
        for _ in range(params.max_halvings + 1):
            try:
                if is_profile:
                    new = step_theta(state, params, dt)
                else:
                    cand = _advance_polygon(g, params, dt)
                    gn = geometry(cand)
                    if gn.winding != omega0:
                        raise StepFailure("winding number changed")
                    new = cand
                break
            except (StepFailure, CurveError) as exc:
                log.debug("step failed at t=%g (dt=%g): %s", t, dt, exc)
                dt *= 0.5
        if new is None:
            traj.set_termination("step_failure")
            break
        step += 1
        t += dt
        state = new
        if not is_profile:
            if resample_enabled and step % params.resample_interval == 0:
                try:
                    state = resample(state)
                    gn = geometry(state)
                    segment += 1
                except CurveError:
                    traj.set_termination("step_failure")
                    break
            g = gn
        reason = None
        if is_profile:
            area_now, kmax_now = state.area(), float(state.k.max())
        else:
            area_now, kmax_now = g.area, float(g.curvature.max())
        if not is_profile and g.winding != omega0:
            reason = "step_failure"
        elif area_now <= area_floor:
            reason = "area_floor"
        elif kmax_now >= k_cap:
            reason = "k_cap"
        elif t >= params.t_cap:
            reason = "t_cap"
        elif step >= params.max_steps:
            reason = "max_steps"
        rec = None
        if reason is not None or step - last_recorded >= params.record_interval:
            rec = make_record(t, step, segment)
            traj.records.append(rec)
            last_recorded = step
        if reason is not None:
            traj.snapshots.append(Snapshot(t, state, step))
            traj.set_termination(reason)
            break
        if policy.due(t, area_now):
            traj.snapshots.append(Snapshot(t, state, step))
    if traj.records[-1].t != t:
        traj.records.append(make_record(t, step, segment))
    if traj.snapshots[-1].t != t:
        traj.snapshots.append(Snapshot(t, state, step))
    traj.T_est = extinction_estimate(traj)
    return traj


# ---------------------------------------------------------------------------
# analysis


def _nonuniform_derivative(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Three-point derivative at interior samples of a non-uniform series."""
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    return (
        -h2 / (h1 * (h1 + h2)) * f[:-2]
        + (h2 - h1) / (h1 * h2) * f[1:-1]
        + h1 / (h2 * (h1 + h2)) * f[2:]
    )


@dataclass(frozen=True)
class IdentityReport:
    length: float
    area: float
    energy: float
    count: int

    @property
    def worst(self) -> float:
        return max(self.length, self.area, self.energy)


def identity_residuals(traj: Trajectory, stride: int = 1):
    """Arrays of relative residuals of the length, area and energy laws.

    Derivatives use three consecutive records (taken every ``stride``);
    triples that straddle a resampling are skipped.
    """
    recs = traj.records[::stride]
    if len(recs) < 3:
        raise ValueError("need at least 3 records")
    p = traj.params
    t = np.array([r.t for r in recs])
    seg = np.array([r.segment for r in recs])
    L = np.array([r.L for r in recs])
    A = np.array([r.A for r in recs])
    E = np.array([r.E for r in recs])
    ok = (seg[:-2] == seg[1:-1]) & (seg[1:-1] == seg[2:])
    mid = slice(1, -1)
    omega = np.array([r.omega for r in recs])[mid]
    ik2 = np.array([r.int_k2 for r in recs])[mid]
    iF2 = np.array([r.int_F2 for r in recs])[mid]
    laws = {
        "length": (L, -p.sigma1 * ik2 - TWO_PI * omega * p.sigma2),
        "area": (A, -TWO_PI * omega * p.sigma1 - p.sigma2 * L[mid]),
        "energy": (E, -iF2),
    }
    out = {}
    for name, (series, exact) in laws.items():
        num = _nonuniform_derivative(t, series)
        out[name] = (np.abs(num - exact) / np.abs(exact))[ok]
    return out


def verify_identities(traj: Trajectory, stride: int = 1) -> IdentityReport:
    """Max relative residuals of the exact length, area and energy laws."""
    res = identity_residuals(traj, stride)
    return IdentityReport(
        length=float(res["length"].max()),
        area=float(res["area"].max()),
        energy=float(res["energy"].max()),
        count=int(res["length"].size),
    )


def maximal_time_upper_bound(initial, params: FlowParams) -> float:
    """``min(L0 / (2 pi sigma2), A0 / (2 pi sigma1))``."""
    rec = record_for(initial, params)
    if rec.L <= 0 or rec.A <= 0:
        raise ValueError("T_max needs positive length and area")
    bound = rec.A / (TWO_PI * params.sigma1)
    if params.sigma2 > 0:
        bound = min(bound, rec.L / (TWO_PI * params.sigma2))
    return bound


def extinction_estimate(traj: Trajectory) -> float | None:
    """Extrapolated extinction time, or ``None`` unless stopped by area floor.

    Each record in the final 10% gives ``T_i = t_i + A_i / (2 pi w sigma1 +
    sigma2 L_i)``; the error of ``T_i`` scales as ``(T - t_i)^{3/2}``, so a
    least-squares fit of ``T_i`` against that power is extrapolated to zero.
    """
    if traj.termination != "area_floor":
        return None
    p = traj.params
    recs = traj.records
    n = max(3, len(recs) // 10)
    tail = recs[-n:]
    t = np.array([r.t for r in tail])
    A = np.array([r.A for r in tail])
    L = np.array([r.L for r in tail])
    omega = np.array([r.omega for r in tail])
    rate = TWO_PI * omega * p.sigma1 + p.sigma2 * L
    T_i = t + A / rate
    tau = np.clip(T_i - t, 0.0, None) ** 1.5
    if len(tail) < 3 or np.ptp(tau) <= 1e-12 * max(tau.max(), 1e-300):
        return float(T_i[-1])
    design = np.stack([np.ones_like(tau), tau], axis=1)
    coef, *_ = np.linalg.lstsq(design, T_i, rcond=None)
    return float(coef[0])


def nonconvex_threshold(params: FlowParams, T_max: float, alpha: float = 1.0) -> float:
    """Admissible size of ``sqrt(L0) ||k_s||_2`` for eventual convexity.

    ``(sqrt(25 s2^2 + 14 s1 (2 - alpha) / T_max) - 5 s2) / (14 s1)``.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    s1, s2 = params.sigma1, params.sigma2
    return (math.sqrt(25 * s2**2 + 14 * s1 * (2 - alpha) / T_max) - 5 * s2) / (14 * s1)


def nonconvex_threshold_squared(params: FlowParams, T_max: float, alpha: float = 1.0) -> float:
    """Squared form, the bound for ``L0 ||k_s||_2^2``."""
    return nonconvex_threshold(params, T_max, alpha) ** 2


def threshold_functional(state) -> float:
    """``sqrt(L) ||k_s||_2``; scales like 1/length."""
    rec = record_for(state, FlowParams())
    return math.sqrt(rec.L * rec.ks_norm2)


@dataclass(frozen=True)
class ThresholdCheck:
    value: float
    bound: float
    squared_value: float
    squared_bound: float
    T_max: float
    alpha: float

    @property
    def holds(self) -> bool:
        return self.value <= self.bound

    @property
    def squared_holds(self) -> bool:
        return self.squared_value <= self.squared_bound


def threshold_predicate(state, params: FlowParams, alpha: float = 1.0, T_max: float | None = None):
    T_max = maximal_time_upper_bound(state, params) if T_max is None else T_max
    value = threshold_functional(state)
    bound = nonconvex_threshold(params, T_max, alpha)
    return ThresholdCheck(value, bound, value**2, bound**2, T_max, alpha)


@dataclass(frozen=True)
class SpeedBoundReport:
    M: float
    M1: float
    worst_global_margin: float
    worst_window_margin: float
    checked: int

    @property
    def holds(self) -> bool:
        return self.worst_global_margin >= 0 and self.worst_window_margin >= 0


def speed_bounds(traj: Trajectory) -> SpeedBoundReport:
    """Check the gradient-based speed bounds at every profile snapshot.

    ``M^2 = sup(F^2 + F_theta^2)`` at ``t = 0``; ``M1 = max(2 pi M, 2 pi + 1/(2 pi))``.
    Global: ``F_max <= M1 (1 + int |F| dtheta)``.  Window: on
    ``|theta - theta*| <= 1/(4 pi)`` around the maximiser ``theta*``,
    ``F_max <= 2 F(theta) + M / (2 pi)``.
    """
    states = [s.state for s in traj.snapshots]
    if not all(isinstance(s, AngleProfile) for s in states):
        raise TypeError("speed_bounds needs a tangent-angle trajectory")
    p = traj.params
    first = states[0]
    F0 = speed(first.k, p)
    M = float(np.sqrt(np.max(F0**2 + central_diff(F0, first.h) ** 2)))
    M1 = max(TWO_PI * M, TWO_PI + 1.0 / TWO_PI)
    gmin = wmin = math.inf
    for prof in states:
        F = speed(prof.k, p)
        fmax = float(F.max())
        gmin = min(gmin, M1 * (1.0 + prof.integrate(np.abs(F))) - fmax)
        j = int(np.argmax(F))
        dist = np.abs((prof.theta - prof.theta[j] + np.pi) % TWO_PI - np.pi)
        window = dist <= 1.0 / (4 * np.pi)
        wmin = min(wmin, float(np.min(2 * F[window] + M / TWO_PI - fmax)))
    return SpeedBoundReport(M, M1, gmin, wmin, len(states))


def state_points(state) -> np.ndarray:
    if isinstance(state, AngleProfile):
        return reconstruct_points(state, check=False)
    return state.points

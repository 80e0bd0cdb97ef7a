"""Continuous rescaling about the extinction point and its diagnostics.

With extinction time ``T`` and point ``O`` the rescaled curve is
``phi(t) (gamma - O)`` with ``phi = (2T - 2t)^{-1/2}`` and rescaled time
``that = -log(1 - t/T) / 2``.  It evolves by
``d/dthat gamma_hat = gamma_hat + (sigma1 k_hat + sqrt(2T) e^{-that} sigma2) nu_hat``
for any choice of ``T`` and ``O``, so the identities below can be checked on
a trajectory whose extinction data are only estimated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import (
    TWO_PI,
    AngleProfile,
    CurveError,
    SampledCurve,
    area_centroid,
    geometry,
    profile_from_curve,
    reconstruct_points,
)
from .flow import FlowParams, Trajectory, second_diff, threshold_predicate


class RescalingError(ValueError):
    pass


def rescaled_time(t, T: float):
    return -0.5 * np.log1p(-np.asarray(t, dtype=float) / T)


def physical_time(that, T: float):
    return T * (1.0 - np.exp(-2.0 * np.asarray(that, dtype=float)))


def scale_factor(t, T: float):
    return (2.0 * T - 2.0 * np.asarray(t, dtype=float)) ** -0.5


@dataclass
class RescaledState:
    """One rescaled curve.

    ``points``, ``normals`` (inward) and ``k_hat`` are sampled at the same
    nodes; ``weights`` are the rescaled arclength quadrature weights.
    """

    t: float
    that: float
    phi: float
    points: np.ndarray
    normals: np.ndarray
    k_hat: np.ndarray
    weights: np.ndarray
    L_hat: float
    A_hat: float
    kshat_norm2: float
    source: SampledCurve | AngleProfile

    @property
    def is_profile(self) -> bool:
        return isinstance(self.source, AngleProfile)

    def integrate(self, values) -> float:
        return float(np.sum(np.asarray(values) * self.weights))


def rescale_state(state, t: float, T: float, origin) -> RescaledState:
    o = np.asarray(origin, dtype=float)
    phi = float(scale_factor(t, T))
    that = float(rescaled_time(t, T))
    if isinstance(state, AngleProfile):
        pts = reconstruct_points(state, check=False)
        th = state.theta
        normals = np.stack([-np.sin(th), np.cos(th)], axis=1)
        k = state.k
        weights = phi * state.h / k
        length, area = state.length(), state.area()
        kt = (np.roll(k, -1) - np.roll(k, 1)) / (2 * state.h)
        ks2 = state.integrate(kt**2 * k)
    else:
        g = geometry(state)
        pts, normals, k = g.points, g.normals, g.curvature
        weights = phi * g.vertex_lengths
        length, area = g.length, g.area
        ks2 = g.ks_norm2()
    return RescaledState(
        t=float(t),
        that=that,
        phi=phi,
        points=phi * (pts - o),
        normals=normals,
        k_hat=k / phi,
        weights=weights,
        L_hat=phi * length,
        A_hat=phi**2 * area,
        kshat_norm2=ks2 / phi**3,
        source=state,
    )


@dataclass
class RescaledTrajectory:
    """Rescaled snapshots plus rescaled versions of every diagnostics record."""

    T: float
    origin: np.ndarray
    params: FlowParams
    states: list[RescaledState]
    that: np.ndarray
    L_hat: np.ndarray
    A_hat: np.ndarray
    khat_min: np.ndarray
    khat_max: np.ndarray
    kshat_norm2: np.ndarray
    record_t: np.ndarray
    initial_length: float = 0.0
    extra: dict = field(default_factory=dict)

    def state_times(self) -> np.ndarray:
        return np.array([s.that for s in self.states])

    def state_at(self, that: float) -> RescaledState:
        """Snapshot closest to the requested rescaled time."""
        times = self.state_times()
        return self.states[int(np.argmin(np.abs(times - that)))]

    def subsample(self, stride: int) -> "RescaledTrajectory":
        """Every ``stride``-th snapshot (always keeping the first)."""
        out = RescaledTrajectory(**{**self.__dict__})
        out.states = self.states[::stride]
        return out


def state_centroid(state) -> np.ndarray:
    if isinstance(state, AngleProfile):
        return area_centroid(reconstruct_points(state, check=False))
    return geometry(state).centroid()


def extinction_point(traj: Trajectory, T: float | None = None) -> np.ndarray:
    """Final point estimated by extrapolating snapshot centroids.

    Centroids of the last 10% of snapshots (at least 3) are fitted linearly
    in ``T - t`` and evaluated at ``T - t = 0``.

    Raises
    ------
    RescalingError
        With fewer than three usable snapshots or without an extinction time.
    """
    T = traj.T_est if T is None else T
    if T is None:
        raise RescalingError("trajectory has no extinction estimate")
    snaps = [s for s in traj.snapshots if s.t < T]
    if len(snaps) < 3:
        raise RescalingError("need at least three snapshots before extinction")
    n = max(3, len(snaps) // 10)
    tail = snaps[-n:]
    tau = np.array([T - s.t for s in tail])
    cents = np.array([state_centroid(s.state) for s in tail])
    design = np.stack([np.ones_like(tau), tau], axis=1)
    coef, *_ = np.linalg.lstsq(design, cents, rcond=None)
    return coef[0]


def rescale(traj: Trajectory, T: float | None = None, origin=None) -> RescaledTrajectory:
    """Rescale all snapshots and records with ``t < T``.

    Raises
    ------
    RescalingError
        If ``T`` does not exceed the last recorded time.
    """
    T = traj.T_est if T is None else T
    if T is None:
        raise RescalingError("no extinction time available")
    if T <= traj.records[-1].t:
        raise RescalingError(f"T={T!r} does not exceed the last recorded time {traj.records[-1].t!r}")
    origin = extinction_point(traj, T) if origin is None else np.asarray(origin, dtype=float)
    states = [rescale_state(s.state, s.t, T, origin) for s in traj.snapshots]
    t = traj.series("t")
    phi = scale_factor(t, T)
    return RescaledTrajectory(
        T=float(T),
        origin=np.asarray(origin, dtype=float),
        params=traj.params,
        states=states,
        that=rescaled_time(t, T),
        L_hat=phi * traj.series("L"),
        A_hat=phi**2 * traj.series("A"),
        khat_min=traj.series("k_min") / phi,
        khat_max=traj.series("k_max") / phi,
        kshat_norm2=traj.series("ks_norm2") / phi**3,
        record_t=t,
        initial_length=traj.records[0].L,
    )


# ---------------------------------------------------------------------------
# rescaled area


@dataclass(frozen=True)
class AreaLimitReport:
    target: float
    gap_last: float
    that_last: float
    gap_at: dict
    decay_rate: float | None

    def gap(self, that: float) -> float:
        return self.gap_at[that]


def rescaled_area_limit(rescaled: RescaledTrajectory, probes=(2.0, 4.0, 6.0)) -> AreaLimitReport:
    """Distance of the rescaled area from ``sigma1 * pi``.

    ``gap_at`` interpolates ``|A_hat - sigma1 pi|`` at the probe times that
    were reached; ``decay_rate`` is the slope of ``-log|gap|`` against
    ``that`` for ``that >= 2`` (``None`` with fewer than 10 such records).
    """
    target = rescaled.params.sigma1 * np.pi
    that, ahat = rescaled.that, rescaled.A_hat
    gap = np.abs(ahat - target)
    gap_at = {p: float(abs(np.interp(p, that, ahat) - target)) for p in probes if p <= that[-1]}
    late = (that >= 2.0) & (gap > 0)
    rate = None
    if late.sum() >= 10:
        slope = np.polyfit(that[late], np.log(gap[late]), 1)[0]
        rate = float(-slope)
    return AreaLimitReport(float(target), float(gap[-1]), float(that[-1]), gap_at, rate)


# ---------------------------------------------------------------------------
# monotonicity


@dataclass
class MonotonicityTrack:
    that: np.ndarray
    R: np.ndarray
    intQ2rho: np.ndarray
    defect: np.ndarray
    dR: np.ndarray
    residual: np.ndarray
    max_increase: float
    nonincreasing_from: float | None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual)) if self.residual.size else float("nan")

    def rows(self):
        for i in range(self.that.size):
            yield {
                "that": float(self.that[i]),
                "R": float(self.R[i]),
                "intQ2rho": float(self.intQ2rho[i]),
                "defect": float(self.defect[i]),
            }


def gaussian_density(state: RescaledState, params: FlowParams):
    r2 = np.sum(state.points**2, axis=1)
    return np.exp(-r2 / (2.0 * params.sigma1))


def q_field(state: RescaledState, T: float, params: FlowParams) -> np.ndarray:
    """``<g, nu>/sqrt(s1) + sqrt(s1) k + sqrt(2T) s2 e^{-that} / (2 sqrt(s1))``."""
    s1, s2 = params.sigma1, params.sigma2
    support = np.sum(state.points * state.normals, axis=1)
    root = math.sqrt(s1)
    return support / root + root * state.k_hat + math.sqrt(2 * T) * s2 * math.exp(-state.that) / (2 * root)


def monotonicity_track(rescaled: RescaledTrajectory, params: FlowParams | None = None) -> MonotonicityTrack:
    """Gaussian-weighted length and the residual of its evolution law.

    ``dR/dthat`` is a three-point derivative over consecutive snapshots;
    the residual ``|dR/dthat + int Q^2 rho - defect|`` is absolute
    (``R`` is of order one in rescaled units).
    """
    params = rescaled.params if params is None else params
    T = rescaled.T
    states = rescaled.states
    that = np.array([s.that for s in states])
    R = np.empty(len(states))
    q2 = np.empty(len(states))
    for i, st in enumerate(states):
        rho = gaussian_density(st, params)
        R[i] = st.integrate(rho)
        q2[i] = st.integrate(q_field(st, T, params) ** 2 * rho)
    defect = T * params.sigma2**2 / (2 * params.sigma1) * np.exp(-2 * that) * R
    if that.size >= 3:
        h1 = that[1:-1] - that[:-2]
        h2 = that[2:] - that[1:-1]
        dR = (
            -h2 / (h1 * (h1 + h2)) * R[:-2]
            + (h2 - h1) / (h1 * h2) * R[1:-1]
            + h1 / (h2 * (h1 + h2)) * R[2:]
        )
        residual = np.abs(dR + q2[1:-1] - defect[1:-1])
    else:
        dR = residual = np.array([])
    inc = np.diff(R)
    max_inc = float(max(inc.max(), 0.0)) if inc.size else 0.0
    start = None
    if inc.size:
        bad = np.nonzero(inc > 0)[0]
        start = float(that[0]) if bad.size == 0 else (float(that[bad[-1] + 1]) if bad[-1] + 1 < that.size - 1 else None)
    return MonotonicityTrack(that, R, q2, defect, dR, residual, max_inc, start)


@dataclass(frozen=True)
class MonotonicityConvergence:
    """Residual behaviour under doubling of the snapshot density.

    ``raw_ratio`` compares the largest residual on the coarse grid with the
    largest fine-grid residual at the same times.  ``three_level_ratio``
    uses grids with strides ``4s, 2s, s`` and compares successive
    differences of the signed residual, which removes any part of the
    residual that does not depend on the snapshot density (spatial error).
    """

    raw_ratio: float
    three_level_ratio: float
    base_stride: int


def _signed_residual(rescaled: RescaledTrajectory, stride: int, params) -> np.ndarray:
    m = monotonicity_track(rescaled.subsample(stride), params)
    return m.dR + m.intQ2rho[1:-1] - m.defect[1:-1]


def monotonicity_convergence(
    rescaled: RescaledTrajectory, params: FlowParams | None = None, base_stride: int = 1
) -> MonotonicityConvergence:
    s1 = _signed_residual(rescaled, base_stride, params)
    s2 = _signed_residual(rescaled, 2 * base_stride, params)
    s4 = _signed_residual(rescaled, 4 * base_stride, params)
    # interior point i of a grid with stride 2s is point 2i + 1 of the stride-s grid
    fine = np.abs(s1[1::2][: s2.size])
    n = min(fine.size, s2.size)
    raw = float(np.max(np.abs(s2[:n])) / np.max(fine[:n]))
    idx = np.arange(s4.size)
    a, b = s1[4 * idx + 3], s2[2 * idx + 1]
    three = float(np.max(np.abs(s4 - b)) / np.max(np.abs(b - a)))
    return MonotonicityConvergence(raw, three, base_stride)


# ---------------------------------------------------------------------------
# limit shape


@dataclass(frozen=True)
class LimitShapeReport:
    sup_residual: float
    l2_residual: float
    fitted_radius: float
    fitted_center: tuple
    that: float


def fit_circle(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares circle through points."""
    x, y = points[:, 0], points[:, 1]
    design = np.stack([x, y, np.ones_like(x)], axis=1)
    rhs = x**2 + y**2
    (a, b, c), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = np.array([a / 2, b / 2])
    return center, float(math.sqrt(c + center @ center))


def limit_shape_residual(state: RescaledState, params: FlowParams) -> LimitShapeReport:
    """Residual of the stationary equation ``<g, nu> = -sigma1 k``.

    ``l2_residual`` is the root mean square against rescaled arclength.
    """
    res = np.sum(state.points * state.normals, axis=1) + params.sigma1 * state.k_hat
    l2 = math.sqrt(state.integrate(res**2) / state.integrate(np.ones_like(res)))
    center, radius = fit_circle(state.points)
    return LimitShapeReport(float(np.max(np.abs(res))), l2, radius, tuple(center.tolist()), state.that)


# ---------------------------------------------------------------------------
# arclength derivative decay


@dataclass(frozen=True)
class KsDecayReport:
    that: np.ndarray
    functional: np.ndarray
    fitted_rate: float | None
    alpha: float
    threshold_holds: bool
    rate_ok: bool | None
    convex_from: float | None
    initially_convex: bool


KS_FLOOR = 1e-14


def ks_decay_track(
    rescaled: RescaledTrajectory, params: FlowParams | None = None, alpha: float = 1.0, initial_state=None
) -> KsDecayReport:
    """Series ``L_hat ||k_hat_s||^2`` and the first time from which ``min k > 0``.

    The exponential rate is fitted over the records with ``that >= 1`` and
    the functional above ``KS_FLOOR``; it is only judged against ``alpha`` when the initial threshold holds.
    """
    params = rescaled.params if params is None else params
    that = rescaled.that
    func = rescaled.L_hat * rescaled.kshat_norm2
    holds = False
    if initial_state is not None:
        holds = threshold_predicate(initial_state, params, alpha).holds
    # below the floor the functional is round-off (e.g. a circle)
    sel = (that >= 1.0) & (func > KS_FLOOR)
    rate = None
    if sel.sum() >= 5:
        rate = float(-np.polyfit(that[sel], np.log(func[sel]), 1)[0])
    rate_ok = None if not holds or rate is None else rate >= alpha * (1 - 1e-2)
    positive = rescaled.khat_min > 0
    convex_from = None
    if positive[-1]:
        bad = np.nonzero(~positive)[0]
        convex_from = float(that[0]) if bad.size == 0 else float(that[bad[-1] + 1])
    return KsDecayReport(that, func, rate, alpha, holds, rate_ok, convex_from, bool(positive[0]))


# ---------------------------------------------------------------------------
# entropy


@dataclass
class EntropyTrack:
    that: np.ndarray
    f: np.ndarray
    E_hat: np.ndarray
    decay_product: np.ndarray
    skipped: int
    that0: float | None
    sup_E_hat: float
    bound: float | None
    stabilization: float | None

    def rows(self):
        for i in range(self.that.size):
            yield {"that": float(self.that[i]), "f": float(self.f[i]), "Ehat": float(self.E_hat[i])}


def entropy_density(k_hat: np.ndarray, h: float, that: float, T: float, params: FlowParams) -> np.ndarray:
    """``u = -1 + s1 k (k_thth + k) - 2 sqrt(2T) e^{-that} s2 k``."""
    s1, s2 = params.sigma1, params.sigma2
    return -1.0 + s1 * k_hat * (second_diff(k_hat, h) + k_hat) - 2 * math.sqrt(2 * T) * math.exp(-that) * s2 * k_hat


def rescaled_entropy_track(
    rescaled: RescaledTrajectory, params: FlowParams | None = None, tol: float = 1e-3, profile_size: int = 256
) -> EntropyTrack:
    """Entropy quantities per convex snapshot.

    Polygon snapshots are converted to tangent-angle profiles; non-convex
    ones are skipped and counted.  ``that0`` is the first snapshot time
    after which ``f <= tol`` holds for every remaining snapshot.  ``bound``
    is ``max(sup_{that < that0} E_hat, E_hat(that0) + 3 s2 L(0) / (2 pi s1) - 3 T s2^2 / s1)``.
    ``stabilization`` is the largest rise of the running max of ``E_hat``
    after ``that = 3`` (``None`` if not reached).
    """
    params = rescaled.params if params is None else params
    T = rescaled.T
    rows = []
    skipped = 0
    for st in rescaled.states:
        src = st.source
        if not isinstance(src, AngleProfile):
            try:
                src = profile_from_curve(src, profile_size)
            except CurveError:
                skipped += 1
                continue
        k_hat = src.k / st.phi
        u = entropy_density(k_hat, src.h, st.that, T, params)
        rows.append((st.that, src.integrate(u), src.integrate(np.log(k_hat)) / TWO_PI, math.exp(-st.that) * k_hat.max()))
    if not rows:
        empty = np.array([])
        return EntropyTrack(empty, empty, empty, empty, skipped, None, float("nan"), None, None)
    that, f, ehat, prod = (np.array(c) for c in zip(*rows))
    ok_after = np.flip(np.cumprod(np.flip(f <= tol))).astype(bool)
    idx0 = int(np.argmax(ok_after)) if ok_after.any() else None
    that0 = float(that[idx0]) if idx0 is not None else None
    bound = None
    if idx0 is not None:
        s1, s2 = params.sigma1, params.sigma2
        before = ehat[:idx0].max() if idx0 > 0 else -math.inf
        bound = float(max(before, ehat[idx0] + 3 * s2 * rescaled.initial_length / (TWO_PI * s1) - 3 * T * s2**2 / s1))
    running = np.maximum.accumulate(ehat)
    stab = None
    late = that >= 3.0
    if late.any():
        i3 = int(np.argmax(late))
        stab = float(running[-1] - running[i3])
    return EntropyTrack(that, f, ehat, prod, skipped, that0, float(ehat.max()), bound, stab)


# ---------------------------------------------------------------------------
# sensitivity to the extinction estimate


def extinction_sensitivity(traj: Trajectory, delta: float, that_probe: float = 6.0) -> dict:
    """Rescaled area and limit residual at ``that_probe`` for ``T_est`` and ``T_est +- delta``.

    ``T_est - delta`` is skipped when it does not exceed the last recorded time.
    """
    out = {}
    for shift in (-delta, 0.0, delta):
        T = traj.T_est + shift
        if T <= traj.records[-1].t:
            continue
        rs = rescale(traj, T)
        area = float(np.interp(that_probe, rs.that, rs.A_hat))
        lim = limit_shape_residual(rs.state_at(that_probe), traj.params)
        out[shift] = {"T": T, "A_hat": area, "limit_residual": lim.sup_residual}
    return out

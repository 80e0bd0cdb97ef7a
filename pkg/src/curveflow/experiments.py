"""Scenario configuration, end-to-end runs, sweeps and re-analysis."""

from __future__ import annotations

import copy
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .concentration import concentration_series, lifespan_monitor
from .curve import AngleProfile, CurveError, as_curve, geometry
from .flow import (
    DiagnosticsRecord,
    FlowParams,
    Snapshot,
    Trajectory,
    evolve,
    maximal_time_upper_bound,
    threshold_predicate,
    verify_identities,
)
from .presets import preset
from .rescaling import (
    RescalingError,
    limit_shape_residual,
    monotonicity_track,
    rescale,
    rescaled_area_limit,
    rescaled_entropy_track,
    ks_decay_track,
)
from .svg import write_frame

log = logging.getLogger(__name__)

OUTPUT_ENV = "CURVEFLOW_OUTPUT"

#: verdict policy (a chosen convention, not derived)
AREA_TOLERANCE = 0.02
ROUNDNESS_LIMIT = 1.05
LIMIT_RESIDUAL_LIMIT = 5e-2

#: flow settings applied to runs unless the config overrides them; the
#: smaller area floor lets the final rescaled record approach the limit
RUN_FLOW_DEFAULTS = {"area_floor_fraction": 1e-5}


class ConfigError(ValueError):
    pass


@dataclass
class AnalysisToggles:
    identities: bool = True
    rescaling: bool = True
    concentration: bool = False
    entropy: bool = True
    concentration_rho: float | None = None
    eps1: float = 1.0


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``initial`` holds either ``{"preset": name, "params": {...}, "n": N,
    "representation": "polygon" | "profile"}`` or ``{"file": path}``.
    """

    initial: dict = field(default_factory=lambda: {"preset": "circle", "params": {}})
    flow: FlowParams = field(default_factory=lambda: FlowParams(**RUN_FLOW_DEFAULTS))
    analysis: AnalysisToggles = field(default_factory=AnalysisToggles)
    output_dir: str | None = None
    seed: int = 0
    name: str | None = None
    alpha: float = 1.0
    frames: int = 6

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = copy.deepcopy(data)
        known = {"initial", "flow", "analysis", "output_dir", "seed", "name", "alpha", "frames"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        initial = data.get("initial", {"preset": "circle", "params": {}})
        if not isinstance(initial, dict) or ("preset" not in initial and "file" not in initial):
            raise ConfigError("initial must name a preset or a file")
        flow_data = {**RUN_FLOW_DEFAULTS, **data.get("flow", {})}
        try:
            flow = FlowParams.from_dict(flow_data)
            analysis = AnalysisToggles(**data.get("analysis", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not 0 < float(data.get("alpha", 1.0)) < 2:
            raise ConfigError("alpha must lie in (0, 2)")
        return cls(
            initial=initial,
            flow=flow,
            analysis=analysis,
            output_dir=data.get("output_dir"),
            seed=int(data.get("seed", 0)),
            name=data.get("name"),
            alpha=float(data.get("alpha", 1.0)),
            frames=int(data.get("frames", 6)),
        )

    def to_dict(self) -> dict:
        return {
            "initial": self.initial,
            "flow": self.flow.to_dict(),
            "analysis": dict(self.analysis.__dict__),
            "output_dir": self.output_dir,
            "seed": self.seed,
            "name": self.name,
            "alpha": self.alpha,
            "frames": self.frames,
        }


def load_config(path) -> ScenarioConfig:
    try:
        data = io.read_json(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ScenarioConfig.from_dict(data)


def build_initial(config: ScenarioConfig):
    init = config.initial
    if "file" in init:
        return io.read_state(init["file"])
    params = dict(init.get("params", {}))
    if init["preset"] == "perturbed_circle":
        params.setdefault("seed", config.seed)
    try:
        return preset(init["preset"], params, n=int(init.get("n", 256)), representation=init.get("representation"))
    except CurveError as exc:
        raise ConfigError(str(exc)) from exc


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def _run_dir(config: ScenarioConfig) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    name = config.name or config.initial.get("preset", "run")
    return output_root() / name


# ---------------------------------------------------------------------------
# analysis shared by run and analyze


def _is_convex(state) -> bool:
    if isinstance(state, AngleProfile):
        return True
    g = geometry(state)
    return g.is_convex and g.winding == 1


def analyze_trajectory(traj: Trajectory, config: ScenarioConfig) -> dict:
    """All enabled analyses; returns summary fields plus row tables."""
    params = traj.params
    initial = traj.initial
    out: dict[str, Any] = {"tables": {}}
    T_max = maximal_time_upper_bound(initial, params)
    thr = threshold_predicate(initial, params, config.alpha, T_max)
    out["T_max"] = T_max
    out["T_est"] = traj.T_est
    out["T_est_le_T_max"] = None if traj.T_est is None else bool(traj.T_est <= T_max)
    out["threshold"] = {
        "value": thr.value,
        "bound": thr.bound,
        "holds": thr.holds,
        "squared_value": thr.squared_value,
        "squared_bound": thr.squared_bound,
        "squared_holds": thr.squared_holds,
        "alpha": thr.alpha,
    }
    omegas = {r.omega for r in traj.records}
    out["omega"] = sorted(omegas)
    out["omega_constant"] = len(omegas) == 1
    initially_convex = _is_convex(initial)
    out["initially_convex"] = initially_convex
    kmins = traj.series("k_min")
    became = None
    if kmins[-1] > 0:
        bad = np.nonzero(kmins <= 0)[0]
        became = 0.0 if bad.size == 0 else float(traj.records[bad[-1] + 1].t)
    out["convex_from_t"] = became
    if config.analysis.identities and len(traj.records) >= 3:
        rep = verify_identities(traj)
        out["identities"] = {"length": rep.length, "area": rep.area, "energy": rep.energy, "count": rep.count}
    final = None
    if config.analysis.rescaling and traj.T_est is not None:
        try:
            rs = rescale(traj)
        except RescalingError as exc:
            out["rescaling_error"] = str(exc)
            rs = None
        if rs is not None:
            area = rescaled_area_limit(rs)
            mono = monotonicity_track(rs)
            last = rs.states[-1]
            lim = limit_shape_residual(last, params)
            ks = ks_decay_track(rs, params, config.alpha, initial)
            kh = last.k_hat
            final = {
                "that": last.that,
                "A_hat": last.A_hat,
                "area_rel_gap": abs(last.A_hat - params.sigma1 * math.pi) / (params.sigma1 * math.pi),
                "k_ratio": float(kh.max() / kh.min()) if kh.min() > 0 else math.inf,
                "limit_residual": lim.sup_residual,
                "limit_residual_l2": lim.l2_residual,
                "fitted_radius": lim.fitted_radius,
            }
            out["rescaled"] = {
                "T": rs.T,
                "origin": rs.origin.tolist(),
                "area_gap_last": area.gap_last,
                "area_gap_at": {str(k): v for k, v in area.gap_at.items()},
                "area_decay_rate": area.decay_rate,
                "monotonicity_max_residual": mono.max_residual if mono.residual.size else None,
                "monotonicity_max_increase": mono.max_increase,
                "ks_decay_rate": ks.fitted_rate,
                "ks_rate_ok": ks.rate_ok,
                "final": final,
            }
            ent = None
            if config.analysis.entropy:
                ent = rescaled_entropy_track(rs, params)
                out["entropy"] = {
                    "that0": ent.that0,
                    "sup_E_hat": ent.sup_E_hat,
                    "bound": ent.bound,
                    "running_max_rise_after_3": ent.stabilization,
                    "skipped": ent.skipped,
                    "f_max_after_that0": None
                    if ent.that0 is None
                    else float(ent.f[ent.that >= ent.that0].max()),
                }
            ent_by_t = {}
            if ent is not None:
                ent_by_t = {round(float(a), 12): (float(f), float(e)) for a, f, e in zip(ent.that, ent.f, ent.E_hat)}
            rows = []
            for i, st in enumerate(rs.states):
                f_e = ent_by_t.get(round(st.that, 12), (None, None))
                rows.append(
                    {
                        "that": st.that,
                        "Lhat": st.L_hat,
                        "Ahat": st.A_hat,
                        "khat_min": float(st.k_hat.min()),
                        "khat_max": float(st.k_hat.max()),
                        "kshat_norm2": st.kshat_norm2,
                        "R": float(mono.R[i]),
                        "intQ2rho": float(mono.intQ2rho[i]),
                        "defect": float(mono.defect[i]),
                        "f": f_e[0],
                        "Ehat": f_e[1],
                    }
                )
            out["tables"]["rescaled"] = rows
    if config.analysis.concentration:
        eps1 = config.analysis.eps1
        rho = config.analysis.concentration_rho
        if rho is None:
            rho = 0.25 * traj.records[0].L / math.pi
        out["tables"]["concentration"] = concentration_series(traj, rho, eps1)
        if not initially_convex:
            life = lifespan_monitor(traj, rho, eps1)
            out["lifespan"] = {
                "hypothesis_holds": life.hypothesis_holds,
                "eps0": life.eps0,
                "c0": life.c0,
                "lower_bound": life.lower_bound,
                "consistent": life.consistent,
                "excluded_convex": life.excluded_convex,
            }
    out["verdict"], out["verdict_reason"] = verdict(initially_convex, thr.holds, became, final)
    return out


def verdict(initially_convex: bool, threshold_holds: bool, convex_from, final: dict | None):
    """``round_point``, ``threshold_violated`` or ``inconclusive``.

    Non-convex data outside the eventual-convexity threshold are never
    certified: ``threshold_violated`` if the flow also never became convex,
    otherwise ``inconclusive``.
    """
    if not initially_convex and not threshold_holds:
        if convex_from is None:
            return "threshold_violated", "non-convex initial data outside the threshold; flow never became convex"
        return "inconclusive", "non-convex initial data outside the threshold"
    if final is None:
        return "inconclusive", "no rescaled record (run did not reach the area floor)"
    failures = []
    if not final["area_rel_gap"] < AREA_TOLERANCE:
        failures.append("rescaled area")
    if not final["k_ratio"] < ROUNDNESS_LIMIT:
        failures.append("curvature ratio")
    if not final["limit_residual"] < LIMIT_RESIDUAL_LIMIT:
        failures.append("limit-shape residual")
    if failures:
        return "inconclusive", "failed: " + ", ".join(failures)
    return "round_point", "all round-point checks passed"


# ---------------------------------------------------------------------------
# persistence


def _write_series(run_dir: Path, traj: Trajectory) -> None:
    io.write_jsonl(run_dir / "series.jsonl", (r.to_json() for r in traj.records))


def _write_snapshots(run_dir: Path, traj: Trajectory) -> None:
    snap_dir = run_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, snap in enumerate(traj.snapshots):
        name = io.write_state(snap_dir / f"snap_{i:05d}", snap.state)
        entries.append({"index": i, "t": snap.t, "step": snap.step, "file": name})
    io.write_json(snap_dir / "index.json", entries)


def write_frames(run_dir: Path, traj_or_states, count: int) -> list[str]:
    frame_dir = Path(run_dir) / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    snaps = traj_or_states
    if not snaps or count <= 0:
        return []
    picks = sorted(set(np.linspace(0, len(snaps) - 1, min(count, len(snaps))).round().astype(int).tolist()))
    names = []
    for i in picks:
        snap = snaps[i]
        name = f"frame_{i:05d}.svg"
        write_frame(frame_dir / name, as_curve(snap.state), title=f"t={snap.t:.6g}")
        names.append(name)
    return names


def load_trajectory(run_dir) -> tuple[Trajectory, ScenarioConfig]:
    run_dir = Path(run_dir)
    config = ScenarioConfig.from_dict(io.read_json(run_dir / "config.json"))
    summary = io.read_json(run_dir / "summary.json")
    records = []
    for row in io.read_jsonl(run_dir / "series.jsonl"):
        for key in ("entropy",):
            if row.get(key) is None:
                row[key] = float("nan")
        for key in ("k_ratio", "iso_ratio"):
            if row.get(key) is None:
                row[key] = float("inf")
        records.append(DiagnosticsRecord(**row))
    snaps = []
    for entry in io.read_json(run_dir / "snapshots" / "index.json"):
        state = io.read_state(run_dir / "snapshots" / entry["file"])
        snaps.append(Snapshot(entry["t"], state, entry["step"]))
    kind = "theta" if isinstance(snaps[0].state, AngleProfile) else "polygon"
    traj = Trajectory(params=config.flow, kind=kind, records=records, snapshots=snaps)
    traj.termination = summary.get("termination")
    traj.T_est = summary.get("T_est")
    traj.area_floor = summary.get("area_floor") or 0.0
    k_cap = summary.get("k_cap")
    traj.k_cap = math.inf if k_cap is None else k_cap
    return traj, config


def _summary(config: ScenarioConfig, traj: Trajectory, analysis: dict) -> dict:
    summary = {k: v for k, v in analysis.items() if k != "tables"}
    summary.update(
        {
            "name": config.name,
            "initial": config.initial,
            "kind": traj.kind,
            "termination": traj.termination,
            "steps": traj.records[-1].step,
            "records": len(traj.records),
            "snapshots": len(traj.snapshots),
            "t_last": traj.records[-1].t,
            "area_floor": traj.area_floor,
            "k_cap": traj.k_cap,
            "verdict_policy": {
                "area_rel_tolerance": AREA_TOLERANCE,
                "k_ratio_limit": ROUNDNESS_LIMIT,
                "limit_residual_limit": LIMIT_RESIDUAL_LIMIT,
                "note": "verdict thresholds are a chosen convention, not derived constants",
            },
        }
    )
    return summary


def run(config: ScenarioConfig | dict) -> Path:
    """Evolve, analyze and persist one scenario; returns the run directory.

    Files: ``config.json``, ``series.jsonl``, ``snapshots/``, ``frames/``,
    ``rescaled.jsonl`` and ``concentration.jsonl`` (when enabled),
    ``summary.json``.  Series and snapshots are written before the
    analyses so a failing analysis leaves them on disk.
    """
    if isinstance(config, dict):
        config = ScenarioConfig.from_dict(config)
    run_dir = _run_dir(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(run_dir / "config.json", config.to_dict())
    initial = build_initial(config)
    traj = evolve(initial, config.flow)
    _write_series(run_dir, traj)
    _write_snapshots(run_dir, traj)
    write_frames(run_dir, traj.snapshots, config.frames)
    try:
        analysis = analyze_trajectory(traj, config)
    except Exception:
        io.write_json(
            run_dir / "summary.json",
            {"termination": traj.termination, "T_est": traj.T_est, "verdict": "inconclusive", "analysis_failed": True},
        )
        raise
    for table, rows in analysis["tables"].items():
        io.write_jsonl(run_dir / f"{table}.jsonl", rows)
    io.write_json(run_dir / "summary.json", _summary(config, traj, analysis))
    return run_dir


def analyze(run_dir) -> dict:
    """Recompute the analyses of an existing run; writes ``analysis.json``."""
    run_dir = Path(run_dir)
    traj, config = load_trajectory(run_dir)
    analysis = analyze_trajectory(traj, config)
    result = _summary(config, traj, analysis)
    io.write_json(run_dir / "analysis.json", result)
    return result


def plot(run_dir, count: int = 12) -> list[str]:
    run_dir = Path(run_dir)
    traj, _ = load_trajectory(run_dir)
    return write_frames(run_dir, traj.snapshots, count)


# ---------------------------------------------------------------------------
# sweeps


def _set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _sweep_one(args):
    cfg_dict, point = args
    entry = {"run": Path(cfg_dict["output_dir"]).name, "params": point}
    try:
        config = ScenarioConfig.from_dict(cfg_dict)
        initial = build_initial(config)
        entry["initially_convex"] = _is_convex(initial)
        run_dir = run(config)
        summary = io.read_json(run_dir / "summary.json")
        entry.update(
            {
                "verdict": summary.get("verdict"),
                "termination": summary.get("termination"),
                "T_est": summary.get("T_est"),
                "T_max": summary.get("T_max"),
                "threshold_holds": summary.get("threshold", {}).get("holds"),
                "error": None,
            }
        )
    except Exception as exc:  # recorded, the sweep goes on
        entry.update({"verdict": None, "error": f"{type(exc).__name__}: {exc}"})
    return entry


def sweep(template: dict, grid: dict[str, list], root, workers: int = 1) -> Path:
    """Run the Cartesian product of ``grid`` (dotted config paths -> values).

    Runs are written to ``root/run_XXX`` and listed in ``root/index.json``
    in grid order, together with their verdicts; failures are recorded and
    the sweep continues.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    keys = sorted(grid)
    jobs = []
    for i, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        cfg = copy.deepcopy(template)
        point = dict(zip(keys, values))
        for key, value in point.items():
            _set_path(cfg, key, value)
        cfg["output_dir"] = str(root / f"run_{i:03d}")
        cfg.setdefault("name", f"run_{i:03d}")
        jobs.append((cfg, point))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_sweep_one, jobs))
    else:
        entries = [_sweep_one(job) for job in jobs]
    io.write_json(root / "index.json", {"grid": {k: grid[k] for k in keys}, "runs": entries})
    return root / "index.json"

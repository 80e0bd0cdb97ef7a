"""Planar curve flow with speed ``sigma1 * k + sigma2``: solvers and diagnostics."""

from __future__ import annotations

from .curve import (
    AngleProfile,
    CurveError,
    CurveGeometry,
    SampledCurve,
    as_curve,
    geometry,
    median_curvature,
    profile_from_curve,
    reconstruct_from_curvature,
    resample,
    support_and_width,
)
from .flow import (
    DiagnosticsRecord,
    FlowParams,
    Trajectory,
    evolve,
    maximal_time_upper_bound,
    nonconvex_threshold,
    threshold_predicate,
    verify_identities,
)
from .rescaling import limit_shape_residual, monotonicity_track, rescale, rescaled_entropy_track
from .concentration import critical_radius, local_concentration, sup_concentration
from .presets import preset

__all__ = [
    "AngleProfile",
    "CurveError",
    "CurveGeometry",
    "DiagnosticsRecord",
    "FlowParams",
    "SampledCurve",
    "Trajectory",
    "as_curve",
    "critical_radius",
    "evolve",
    "geometry",
    "limit_shape_residual",
    "local_concentration",
    "maximal_time_upper_bound",
    "median_curvature",
    "monotonicity_track",
    "nonconvex_threshold",
    "preset",
    "profile_from_curve",
    "reconstruct_from_curvature",
    "resample",
    "rescale",
    "rescaled_entropy_track",
    "sup_concentration",
    "support_and_width",
    "threshold_predicate",
    "verify_identities",
]

"""Reading and writing curves, profiles and record series."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .curve import AngleProfile, SampledCurve, theta_grid


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating,)):
        return _clean(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, non-finite floats become null)."""
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def write_json(path, obj, indent: int | None = 2) -> None:
    Path(path).write_text(json.dumps(_clean(obj), sort_keys=True, indent=indent, allow_nan=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_jsonl(path, rows: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(dumps(row) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# curves


def curve_to_json(curve: SampledCurve) -> dict:
    return {"points": curve.points.tolist()}


def curve_from_json(data: dict) -> SampledCurve:
    if "points" not in data:
        raise ValueError("curve JSON needs a 'points' array")
    return SampledCurve(np.asarray(data["points"], dtype=float))


def write_curve(path, curve: SampledCurve) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for x, y in curve.points:
                w.writerow([repr(float(x)), repr(float(y))])
    else:
        write_json(path, curve_to_json(curve), indent=None)


def read_curve(path) -> SampledCurve:
    """Curve from JSON ``{"points": [[x, y], ...]}`` or CSV rows ``x,y``.

    A CSV header row is skipped when it is not numeric.  The polygon is
    closed implicitly; a repeated first point at the end is dropped.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        rows = []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    rows.append([float(row[0]), float(row[1])])
                except (ValueError, IndexError):
                    if i > 0:
                        raise ValueError(f"{path}: bad row {i + 1}: {row}") from None
        pts = np.asarray(rows, dtype=float)
    else:
        pts = np.asarray(read_json(path)["points"], dtype=float)
    if pts.ndim == 2 and pts.shape[0] > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    return SampledCurve(pts)


# ---------------------------------------------------------------------------
# profiles


def profile_to_json(profile: AngleProfile) -> dict:
    return {"theta": profile.theta.tolist(), "k": profile.k.tolist(), "anchor": profile.anchor.tolist()}


def profile_from_json(data: dict) -> AngleProfile:
    k = np.asarray(data["k"], dtype=float)
    if "theta" in data:
        _check_grid(np.asarray(data["theta"], dtype=float), k.size)
    return AngleProfile(k, data.get("anchor", (0.0, 0.0)))


def _check_grid(theta: np.ndarray, m: int) -> None:
    if theta.size != m or not np.allclose(theta, theta_grid(m), atol=1e-9):
        raise ValueError("profile theta values must be the uniform grid 2*pi*j/M")


def write_profile(path, profile: AngleProfile) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "k"])
            for th, k in zip(profile.theta, profile.k):
                w.writerow([repr(float(th)), repr(float(k))])
    else:
        write_json(path, profile_to_json(profile), indent=None)


def read_profile(path) -> AngleProfile:
    """Profile from CSV ``theta,k`` rows (header optional) or JSON."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        th, ks = [], []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    t_val, k_val = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if i > 0:
                        raise ValueError(f"{path}: bad row {i + 1}: {row}") from None
                    continue
                th.append(t_val)
                ks.append(k_val)
        k = np.asarray(ks)
        _check_grid(np.asarray(th), k.size)
        return AngleProfile(k)
    return profile_from_json(read_json(path))


def write_state(path_stem, state) -> str:
    """Write a curve or profile next to ``path_stem``; returns the file name."""
    stem = Path(path_stem)
    if isinstance(state, AngleProfile):
        name = stem.name + ".profile.json"
        write_profile(stem.with_name(name), state)
    else:
        name = stem.name + ".curve.json"
        write_curve(stem.with_name(name), state)
    return name


def _is_profile_file(path: Path) -> bool:
    if ".profile." in path.name:
        return True
    if path.suffix.lower() == ".csv":
        with open(path, newline="") as fh:
            first = next(csv.reader(fh), [])
        return bool(first) and first[0].strip().lower() == "theta"
    data = read_json(path)
    return isinstance(data, dict) and "k" in data


def read_state(path):
    """Curve or profile; profiles are recognized by a ``.profile.`` name,
    a ``theta`` CSV header or a ``k`` key in JSON."""
    path = Path(path)
    if _is_profile_file(path):
        return read_profile(path)
    return read_curve(path)

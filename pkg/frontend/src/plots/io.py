"""Readers for the run-directory file schemas.

The simulator writes snapshots.csv, diagnostics.csv, trace.csv,
cauchy.csv, report.json, and config.cfg with fixed headers and the
``section.key = value`` config grammar. These readers validate the
headers bit-exactly and fail with errors that name the offending file.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

DIAG_FIELDS = (
    "t",
    "mass",
    "energy_hs",
    "entropy_alpha",
    "dissipation_cum",
    "seminorm_hs1",
    "min_u",
    "max_u",
    "support_radius",
)


class SchemaError(ValueError):
    """A run-directory file is missing or malformed."""


def _require(path: Path) -> Path:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"missing {path}")
    return path


def _check_header(path: Path, expected: tuple[str, ...]) -> None:
    with open(path) as fh:
        header = fh.readline().strip()
    if tuple(header.split(",")) != expected:
        raise SchemaError(
            f"{path}: expected header {','.join(expected)!r}, got {header!r}"
        )


def read_diagnostics(path) -> dict[str, np.ndarray]:
    """Columns of diagnostics.csv keyed by field name."""
    path = _require(path)
    _check_header(path, DIAG_FIELDS)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(DIAG_FIELDS):
        raise SchemaError(f"{path}: expected {len(DIAG_FIELDS)} columns")
    return {name: data[:, i] for i, name in enumerate(DIAG_FIELDS)}


def read_snapshots(path):
    """Snapshot table as (times, list of flattened profile arrays, dim).

    1D rows are ``t,x_index,u``; 2D rows are ``t,x_index,y_index,u``.
    Profiles are returned in row order, one array per distinct time.
    """
    path = _require(path)
    with open(path) as fh:
        header = fh.readline().strip()
    if header == "t,x_index,u":
        dim = 1
    elif header == "t,x_index,y_index,u":
        dim = 2
    else:
        raise SchemaError(f"{path}: unrecognized snapshot header {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = []
    profiles = []
    for t in np.unique(data[:, 0]):
        rows = data[data[:, 0] == t]
        times.append(float(t))
        profiles.append(rows[:, -1])
    order = np.argsort(times)
    return np.array(times)[order], [profiles[i] for i in order], dim


def read_trace(path):
    """Support trace as (times, radii)."""
    path = _require(path)
    _check_header(path, ("t", "radius"))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def read_cauchy(path):
    """Regularization-ladder differences as (stages, rungs, diffs)."""
    path = _require(path)
    _check_header(path, ("stage", "rung", "sup_l2_difference"))
    stages, rungs, diffs = [], [], []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            stage, rung, diff = line.strip().split(",")
            stages.append(stage)
            rungs.append(int(rung))
            diffs.append(float(diff))
    return stages, np.array(rungs), np.array(diffs)


def read_report(path) -> dict:
    path = _require(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def read_config(path) -> dict[str, str]:
    """config.cfg as a flat ``section.key -> raw value`` mapping."""
    path = _require(path)
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def reference_exponent(config: dict[str, str]) -> float:
    """Target propagation slope 1/(n d + 2 (s + 1)) from a parsed config."""
    try:
        n = float(config["model.n"])
        s = float(config["model.s"])
        d = int(config["grid.dim"])
    except KeyError as exc:
        raise SchemaError(f"config missing key {exc}") from exc
    return 1.0 / (n * d + 2.0 * (s + 1.0))

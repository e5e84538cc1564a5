"""Readers and validators for lomv run-directory artifacts.

Every loader validates against the documented schema and raises SchemaError
with the file and the problem; rendering refuses to start from files it
cannot fully validate.
"""

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

TRIALS_HEADER = ["trial", "seed", "p", "k", "active_ratio", "beta_star_p", "mode"]
SCATTER_HEADER = ["index", "beta", "lomv_weight", "gmv_weight"]
GCURVE_HEADER = ["y", "g"]

CELL_NAME = re.compile(r"^s(?P<s>[0-9.]+)_d(?P<delta2>[0-9.]+)_p(?P<p>\d+)$")
NONCONV_NAME = re.compile(r"^nonconvergence_p(?P<p>\d+)$")


class SchemaError(ValueError):
    """An artifact does not match its documented schema."""


def _read_rows(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not rows or rows[0] != header:
        raise SchemaError(f"{path}: expected header {','.join(header)}")
    if len(rows) == 1:
        raise SchemaError(f"{path}: no data rows")
    return rows[1:]


def load_trials(path) -> dict:
    """trials.csv -> arrays: trial, k, active_ratio, beta_star_p, mode."""
    rows = _read_rows(path, TRIALS_HEADER)
    trials, ks, ratios, zeros, modes = [], [], [], [], []
    for row in rows:
        if len(row) != len(TRIALS_HEADER):
            raise SchemaError(f"{path}: malformed row {row!r}")
        try:
            trials.append(int(row[0]))
            ks.append(int(row[3]))
            ratio = float(row[4])
            zeros.append(float(row[5]) if row[5] else math.nan)
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric row {row!r}") from exc
        if not 0.0 < ratio <= 1.0:
            raise SchemaError(f"{path}: active_ratio out of (0, 1]: {ratio}")
        ratios.append(ratio)
        if row[6] not in ("", "low", "high", "other"):
            raise SchemaError(f"{path}: bad mode {row[6]!r}")
        modes.append(row[6])
    return {
        "trial": np.array(trials),
        "k": np.array(ks),
        "active_ratio": np.array(ratios),
        "beta_star_p": np.array(zeros),
        "mode": modes,
    }


def load_summary(path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: summary must be a JSON object")
    for field in ("mean", "sd", "p", "trials"):
        if field not in payload:
            raise SchemaError(f"{path}: summary missing field {field!r}")
    return payload


def load_gcurve_summary(path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    for field in ("beta_star", "liminf", "limsup"):
        if field not in payload:
            raise SchemaError(f"{path}: missing field {field!r}")
    return payload


def load_gcurve(path) -> dict:
    rows = _read_rows(path, GCURVE_HEADER)
    ys, gs = [], []
    for row in rows:
        try:
            ys.append(float(row[0]))
            gs.append(float(row[1]))
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: non-numeric row {row!r}") from exc
    return {"y": np.array(ys), "g": np.array(gs)}


def load_weight_scatter(path) -> dict:
    rows = _read_rows(path, SCATTER_HEADER)
    betas, lomv, gmv = [], [], []
    for row in rows:
        try:
            betas.append(float(row[1]))
            lomv.append(float(row[2]))
            gmv.append(float(row[3]))
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: non-numeric row {row!r}") from exc
    return {"beta": np.array(betas), "lomv": np.array(lomv), "gmv": np.array(gmv)}


def discover_grid_cells(run_dir) -> list:
    """Grid cells in a table1/fig2/fig3 run directory, sorted by (delta2, s, p)."""
    run_dir = Path(run_dir)
    cells = []
    for path in sorted(run_dir.glob("s*_d*_p*.csv")):
        match = CELL_NAME.match(path.stem)
        if not match:
            continue
        summary_path = path.with_name(path.stem + ".summary.json")
        if not summary_path.exists():
            raise SchemaError(f"{path}: missing companion {summary_path.name}")
        cells.append(
            {
                "s": float(match["s"]),
                "delta2": float(match["delta2"]),
                "p": int(match["p"]),
                "trials_path": path,
                "summary_path": summary_path,
            }
        )
    if not cells:
        raise SchemaError(f"{run_dir}: no grid cell files (s*_d*_p*.csv) found")
    cells.sort(key=lambda c: (-c["delta2"], -c["s"], c["p"]))
    return cells


def discover_nonconvergence(run_dir) -> dict:
    run_dir = Path(run_dir)
    panels = []
    for path in sorted(run_dir.glob("nonconvergence_p*.csv")):
        match = NONCONV_NAME.match(path.stem)
        if not match:
            continue
        panels.append({"p": int(match["p"]), "trials_path": path})
    if not panels:
        raise SchemaError(f"{run_dir}: no nonconvergence_p*.csv files found")
    panels.sort(key=lambda c: c["p"])
    curve_path = run_dir / "g_curve.csv"
    summary_path = run_dir / "g_curve.summary.json"
    for required in (curve_path, summary_path):
        if not required.exists():
            raise SchemaError(f"{run_dir}: missing {required.name}")
    return {"panels": panels, "curve_path": curve_path, "summary_path": summary_path}

"""File formats: instance CSVs, result CSV/JSON artifacts, and run manifests.

Every writer re-reads and validates what it wrote (a malformed artifact
fails at write time, not in a downstream consumer).  Formats are documented
in docs/formats.md.  JSON uses sorted keys and no trailing whitespace so a
rerun of a deterministic command is byte-identical; timestamps live only in
the manifest.
"""

import csv
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .model import FactorModel

TRIALS_HEADER = ["trial", "seed", "p", "k", "active_ratio", "beta_star_p", "mode"]
WEIGHTS_HEADER = ["index", "beta", "delta2", "weight", "active"]


def load_instance_csv(path) -> "tuple[np.ndarray, np.ndarray]":
    """Read an instance file: one (beta, delta2) row per asset.

    A header row ``beta,delta2`` is optional.  Errors carry the offending
    row number.
    """

    betas = []
    delta2s = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if row_no == 1 and row[0].strip().lower() == "beta":
                continue
            if len(row) < 2:
                raise ValueError(f"row {row_no}: expected 'beta,delta2', got {row!r}")
            try:
                beta = float(row[0])
                delta2 = float(row[1])
            except ValueError as exc:
                raise ValueError(f"row {row_no}: not numeric: {row!r}") from exc
            if not (math.isfinite(beta) and math.isfinite(delta2)):
                raise ValueError(f"row {row_no}: values must be finite")
            if delta2 <= 0:
                raise ValueError(f"row {row_no}: delta2 must be > 0, got {delta2}")
            betas.append(beta)
            delta2s.append(delta2)
    if not betas:
        raise ValueError("instance file contains no assets")
    return np.array(betas), np.array(delta2s)


def load_sigma2_sidecar(instance_path) -> "float | None":
    """sigma2 from ``<instance>.json`` next to the instance file, if present."""
    sidecar = Path(instance_path).with_suffix(".json")
    if not sidecar.exists():
        return None
    with open(sidecar, encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict) or "sigma2" not in payload:
        raise ValueError(f"{sidecar}: sidecar must be an object with a 'sigma2' field")
    return float(payload["sigma2"])


def _json_ready(value):
    if isinstance(value, dict):
        return {key: _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_json_ready(item) for item in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return None
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_json(path, payload: dict) -> None:
    """Write a JSON object deterministically (sorted keys, newline at end).

    Non-finite floats are serialized as null; the documented schemas state
    which fields may be null and what that means.
    """

    text = json.dumps(_json_ready(payload), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text + "\n")
    with open(path, encoding="utf-8") as handle:
        json.load(handle)


def write_weights_csv(path, model: FactorModel, weights) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(WEIGHTS_HEADER)
        for i in range(model.p):
            writer.writerow(
                [
                    i,
                    repr(float(model.betas[i])),
                    repr(float(model.delta2s[i])),
                    repr(float(weights[i])),
                    1 if weights[i] > 0 else 0,
                ]
            )
    validate_weights_csv(path)


def validate_weights_csv(path) -> int:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != WEIGHTS_HEADER:
        raise ValueError(f"{path}: expected header {','.join(WEIGHTS_HEADER)}")
    for row in rows[1:]:
        if len(row) != len(WEIGHTS_HEADER):
            raise ValueError(f"{path}: malformed row {row!r}")
        int(row[0])
        for cell in row[1:4]:
            float(cell)
        if row[4] not in ("0", "1"):
            raise ValueError(f"{path}: active flag must be 0 or 1, got {row[4]!r}")
    return len(rows) - 1


def write_trials_csv(path, batch, p: int, seed: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRIALS_HEADER)
        for t in range(batch.trials):
            zero = batch.beta_star_p[t]
            mode = "" if batch.mode_labels is None else batch.mode_labels[t]
            writer.writerow(
                [
                    t,
                    seed,
                    p,
                    int(batch.ks[t]),
                    repr(float(batch.active_ratios[t])),
                    "" if math.isnan(zero) else repr(float(zero)),
                    mode,
                ]
            )
    validate_trials_csv(path)


def validate_trials_csv(path) -> int:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != TRIALS_HEADER:
        raise ValueError(f"{path}: expected header {','.join(TRIALS_HEADER)}")
    for row in rows[1:]:
        if len(row) != len(TRIALS_HEADER):
            raise ValueError(f"{path}: malformed row {row!r}")
        int(row[0]); int(row[1]); int(row[2]); int(row[3])
        ratio = float(row[4])
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"{path}: active_ratio out of (0, 1]: {ratio}")
        if row[5]:
            float(row[5])
        if row[6] not in ("", "low", "high", "other"):
            raise ValueError(f"{path}: bad mode {row[6]!r}")
    return len(rows) - 1


def summary_payload(batch, config, report=None) -> dict:
    """Summary JSON body for a batch (schema in docs/formats.md)."""
    payload = {
        "mean": batch.summary.mean,
        "sd": batch.summary.sd,
        "q05": batch.summary.q05,
        "q50": batch.summary.q50,
        "q95": batch.summary.q95,
        "p": config.p,
        "trials": config.trials,
        "seed": config.seed,
        "sigma2": config.sigma2,
        "nu2": batch.nu2,
        "beta_star": None,
        "f_beta_star": None,
        "case": None,
    }
    if report is not None:
        payload["case"] = report.case_label
        payload["beta_star"] = report.beta_star
        payload["f_beta_star"] = report.limsup
        payload["f_beta_star_left"] = report.liminf
    frequencies = batch.mode_frequencies()
    if frequencies is not None:
        payload["mode_frequencies"] = frequencies
    return payload


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    params: dict
    seed: "int | None"
    outputs: list
    tool_version: str
    started_utc: str
    finished_utc: str

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "outputs": self.outputs,
            "tool_version": self.tool_version,
            "started_utc": self.started_utc,
            "finished_utc": self.finished_utc,
        }


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def write_manifest(directory, command, params, seed, outputs, started_utc) -> Path:
    manifest = RunManifest(
        command=command,
        params=_json_ready(params),
        seed=seed,
        outputs=sorted(str(name) for name in outputs),
        tool_version=__version__,
        started_utc=started_utc,
        finished_utc=utc_now(),
    )
    path = Path(directory) / "manifest.json"
    write_json(path, manifest.to_json())
    return path


def load_manifest(path) -> RunManifest:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    try:
        return RunManifest(
            command=payload["command"],
            params=payload["params"],
            seed=payload["seed"],
            outputs=payload["outputs"],
            tool_version=payload["tool_version"],
            started_utc=payload["started_utc"],
            finished_utc=payload["finished_utc"],
        )
    except KeyError as exc:
        raise ValueError(f"{path}: manifest missing field {exc}") from exc


def make_run_dir(base, command, seed) -> Path:
    """runs/<command>/<timestamp>-<seed>/ plus a refreshed ``latest`` link."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    directory = Path(base) / command / f"{stamp}-{seed}"
    directory.mkdir(parents=True, exist_ok=False)
    latest = Path(base) / command / "latest"
    try:
        if latest.is_symlink() or latest.exists():
            latest.unlink()
        os.symlink(directory.name, latest)
    except OSError:
        pass  # convenience link only; never fail a run over it
    return directory

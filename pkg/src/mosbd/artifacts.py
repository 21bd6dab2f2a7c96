"""On-disk run artifacts: config snapshot, archive CSV, summary JSON, trace.

All floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import RunSpec
from .decision import mmd_select
from .dominance import ParetoArchive
from .engine import RunResult
from .problems import default_front, error_index
from .problems.antenna import PROXY_VERSION

ARCHIVE_FILE = "archive.csv"
SUMMARY_FILE = "summary.json"
CONFIG_FILE = "config.json"
TRACE_FILE = "trace.jsonl"
INCOMPLETE_FILE = "INCOMPLETE"


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_archive_csv(path: str | Path, archive: ParetoArchive) -> None:
    X = np.array([m.x for m in archive])
    F = archive.objectives
    K, Q = X.shape[1], F.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{k}" for k in range(K)] + [f"phi_{q}" for q in range(Q)])
        for x, f in zip(X, F):
            w.writerow([fmt(v) for v in x] + [fmt(v) for v in f])


def read_archive_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Design and objective matrices from an archive CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty archive file")
    header = rows[0]
    x_cols = [i for i, h in enumerate(header) if h.startswith("x_")]
    f_cols = [i for i, h in enumerate(header) if h.startswith("phi_")]
    if not f_cols or len(x_cols) + len(f_cols) != len(header):
        raise ValueError(f"{path}: expected columns x_0.. and phi_0..")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return data[:, x_cols], data[:, f_cols]


def _json_float(v: float):
    return v if math.isfinite(v) else None


def summarize(spec: RunSpec, result: RunResult) -> dict:
    cfg = result.config
    out = {
        "algo": result.algo,
        "seed": cfg.seed,
        "stop_reason": result.stop_reason,
        "I_stop": result.I_stop,
        "C_FW": result.C_FW,
        "T_RL": result.T_RL,
        "T0": cfg.T0 if result.algo == "sbd" else None,
        "P": cfg.P,
        "I": cfg.I,
        "archive_size": len(result.archive),
        "n_failed": result.n_failed,
        "n_predicted_skips": result.n_predicted_skips,
        "wall_time": result.wall_time,
        "gamma_final": result.gamma_history[-1] if result.gamma_history else 0.0,
        "xi": None,
        "mmd": None,
    }
    if spec.problem["name"] == "dtlz1" and len(result.archive):
        out["xi"] = error_index(result.archive.objectives, default_front(int(spec.problem["Q"])))
    if spec.problem["name"] == "antenna_proxy":
        out["proxy_version"] = PROXY_VERSION
    if len(result.archive):
        out["mmd"] = mmd_select(result.archive).to_dict()
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_float) + "\n")


def begin_artifact(out_dir: str | Path, spec: RunSpec) -> Path:
    """Create the directory, snapshot the config and flag the run incomplete."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / INCOMPLETE_FILE).write_text("run did not finish\n")
    _dump(out / CONFIG_FILE, spec.to_dict())
    return out


def finish_artifact(out: Path, spec: RunSpec, result: RunResult) -> dict:
    write_archive_csv(out / ARCHIVE_FILE, result.archive)
    summary = summarize(spec, result)
    _dump(out / SUMMARY_FILE, summary)
    (out / INCOMPLETE_FILE).unlink(missing_ok=True)
    return summary


def fail_artifact(out: Path, message: str) -> None:
    (out / INCOMPLETE_FILE).write_text(message.rstrip() + "\n")


def load_summary(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        if (path / INCOMPLETE_FILE).exists():
            raise ValueError(f"{path}: run artifact is flagged incomplete")
        path = path / SUMMARY_FILE
    return json.loads(path.read_text())


def compare_summaries(std: dict, sbd: dict) -> dict:
    """Evaluation-count time saving of an SbD run over an StD run."""
    if std.get("algo") != "std" or sbd.get("algo") != "sbd":
        raise ValueError("compare expects an StD summary followed by an SbD summary")
    saving = (std["C_FW"] - sbd["C_FW"]) / std["C_FW"]
    wall = None
    if std.get("wall_time"):
        wall = (std["wall_time"] - sbd["wall_time"]) / std["wall_time"]
    return {"C_FW_std": std["C_FW"], "C_FW_sbd": sbd["C_FW"], "time_saving": saving, "wall_clock_saving": wall}

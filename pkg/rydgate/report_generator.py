"""
Report writers (CSV / JSON / TXT).

Output is deterministic: floats are written with repr, keys keep their
insertion order and no timestamps are embedded, so the same run gives
byte-identical files.
"""

import csv
import json
import os

import numpy as np
import pydantic
import scipy

import rydgate
from rydgate.config import RunSpec, config_hash
from rydgate.propagator import Trajectory, leaked_norm, populations
from rydgate.units import US

SWEEP_COLUMNS = ["index", "R_um", "ratio", "fidelity", "leak", "norm_final", "duration_us", "status", "variant", "message"]


def versions() -> dict:
    return {
        "rydgate": rydgate.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def save_csv(rows: list[dict], path: str, columns: list[str] | None = None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c) for c in columns])
    return path


def save_json(data, path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
        f.write("\n")
    return path


def save_txt(lines: dict, path: str) -> str:
    """Plain key: value summary."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        for key, value in lines.items():
            f.write(f"{key}: {value}\n")
    return path


def metadata(spec: RunSpec, **extra) -> dict:
    return {
        "config_hash": config_hash(spec),
        "versions": versions(),
        "gate": spec.gate,
        "preset": spec.preset,
        **extra,
    }


def save_sweep(records: list, spec: RunSpec, out_dir: str, name: str = "sweep") -> tuple[str, str]:
    """<name>.csv (one record per line) and <name>.json (metadata + records)."""
    rows = [r.model_dump() for r in records]
    csv_path = save_csv(rows, os.path.join(out_dir, f"{name}.csv"), SWEEP_COLUMNS)
    json_path = save_json(
        {
            **metadata(spec, name=name, points=len(rows)),
            "config": spec.model_dump(mode="json"),
            "records": rows,
        },
        os.path.join(out_dir, f"{name}.json"),
    )
    return csv_path, json_path


def trajectory_rows(traj: Trajectory, labels: list[str]) -> list[dict]:
    pops = populations(traj, labels)
    leak = leaked_norm(traj)
    rows = []
    for n, t in enumerate(traj.times):
        row = {"time_us": float(t / US)}
        for label in labels:
            row[f"P({label})"] = float(pops[label][n])
        row["norm"] = float(traj.norms[n])
        row["leaked"] = float(leak[n])
        rows.append(row)
    return rows


def save_trajectory_csv(traj: Trajectory, labels: list[str], path: str) -> str:
    return save_csv(trajectory_rows(traj, labels), path)

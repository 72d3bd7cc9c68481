"""
Parameter sweeps
----------------

Every grid point (R, Omega_c/Omega_p) is an independent gate run. Points
are evaluated serially or on a `multiprocess` pool and merged by grid
index, so the output does not depend on the number of workers.

With a cache directory, each finished point is stored as one JSON file
named by a hash of (config, R, ratio, variant); re-running skips them.
"""

import hashlib
import math
import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
from multiprocess import Pool
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm

from rydgate.config import AxisSpec, RunSpec, build_run, config_hash, parse_config
from rydgate.errors import IntegratorFailure, ValidityError
from rydgate.fidelity import gate_fidelity_run
from rydgate.hamiltonian import ModelConfig, assemble
from rydgate.hilbert import basis_vector
from rydgate.interactions import InteractionTable
from rydgate.json_logger import log_json
from rydgate.logger import log_event
from rydgate.propagator import evolve, populations
from rydgate.units import US

Status = Literal["ok", "validity-warning", "integrator-failure"]

VARIANTS = {
    "second-intermediate": {"intermediate": "second", "decay": True},
    "first-intermediate": {"intermediate": "first", "decay": True},
    "no-decay": {"intermediate": "second", "decay": False},
}


def axis_values(axis: AxisSpec) -> np.ndarray:
    if axis.count == 1:
        return np.array([axis.min])
    return np.linspace(axis.min, axis.max, axis.count)


@dataclass(frozen=True)
class SweepGrid:
    """R axis (R_CT, or R_CC for C2NOT2) x ratio axis, over a template spec."""
    spec: RunSpec
    R_values: tuple[float, ...]
    ratios: tuple[float, ...]

    def __post_init__(self):
        if not self.R_values or not self.ratios:
            raise ValueError("sweep axes need at least one value")

    @classmethod
    def from_spec(cls, spec: RunSpec, R_axis: AxisSpec | None = None, ratio_axis: AxisSpec | None = None) -> "SweepGrid":
        R_axis = R_axis or spec.sweep.R_um
        ratio_axis = ratio_axis or spec.sweep.ratio
        return cls(
            spec,
            tuple(float(v) for v in axis_values(R_axis)),
            tuple(float(v) for v in axis_values(ratio_axis)),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.R_values), len(self.ratios)

    def points(self) -> list[tuple[int, float, float]]:
        """(index, R, ratio), R outer and ratio inner."""
        return [
            (i * len(self.ratios) + j, R, ratio)
            for i, R in enumerate(self.R_values)
            for j, ratio in enumerate(self.ratios)
        ]


class SweepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    R_um: float
    ratio: float
    fidelity: float | None = None
    leak: float | None = None
    norm_final: float | None = None
    duration_us: float | None = None
    status: Status = "ok"
    variant: str = ""
    message: str = ""


# ---------------------------
# One grid point
# ---------------------------
def evaluate_point(
    spec: RunSpec,
    index: int,
    R: float,
    ratio: float,
    variant: str = "",
) -> SweepRecord:
    """Never raises for physics failures; they are reported in the record."""
    overrides = VARIANTS.get(variant, {})
    base = dict(index=index, R_um=R, ratio=ratio, variant=variant)
    try:
        run = build_run(spec, scale_um=R, ratio=ratio, **overrides)
        result = gate_fidelity_run(
            run.model,
            run.layout,
            run.schedule,
            run.integrator,
            target=spec.target,
            controls=tuple(spec.initial_controls) if spec.initial_controls else None,
        )
    except ValidityError as e:
        return SweepRecord(**base, status="validity-warning", message=str(e))
    except IntegratorFailure as e:
        return SweepRecord(**base, status="integrator-failure", message=str(e))

    return SweepRecord(
        **base,
        status="validity-warning" if run.warnings else "ok",
        fidelity=min(max(result.fidelity, 0.0), 1.0),
        leak=result.leak,
        norm_final=result.norm,
        duration_us=result.duration / US,
        message="; ".join(run.warnings),
    )


def _evaluate_task(task: tuple) -> SweepRecord:
    return evaluate_point(*task)


def _cache_path(cache_dir: str, spec_hash: str, R: float, ratio: float, variant: str) -> str:
    key = hashlib.sha256(f"{spec_hash}|{R!r}|{ratio!r}|{variant}".encode("utf-8")).hexdigest()[:20]
    return os.path.join(cache_dir, f"point_{key}.json")


# ---------------------------
# Sweeps
# ---------------------------
def run_points(
    spec: RunSpec,
    points: list[tuple[int, float, float]],
    variant: str = "",
    workers: int = 1,
    cache_dir: str | None = None,
    progress: bool = False,
) -> list[SweepRecord]:
    spec_hash = config_hash(spec)
    results: dict[int, SweepRecord] = {}
    pending = []

    for index, R, ratio in points:
        if cache_dir:
            path = _cache_path(cache_dir, spec_hash, R, ratio, variant)
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as f:
                    results[index] = SweepRecord.model_validate_json(f.read())
                continue
        pending.append((spec, index, R, ratio, variant))

    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
    bar = tqdm(total=len(pending), desc=variant or "sweep", disable=not progress)

    def store(record: SweepRecord) -> None:
        results[record.index] = record
        bar.update(1)
        if cache_dir:
            path = _cache_path(cache_dir, spec_hash, record.R_um, record.ratio, variant)
            with open(path, "w", encoding="utf-8") as f:
                f.write(record.model_dump_json())

    if workers > 1 and len(pending) > 1:
        with Pool(processes=workers) as pool:
            for record in pool.imap(_evaluate_task, pending):
                store(record)
    else:
        for task in pending:
            store(_evaluate_task(task))
    bar.close()

    return [results[index] for index, _, _ in points]


def _log_records(name: str, records: list[SweepRecord]) -> None:
    for record in records:
        if record.status != "ok" or record.message:
            log_event(f"{name} point {record.index} (R={record.R_um:g} um, ratio={record.ratio:g}): "
                      f"{record.status}: {record.message}", level="WARN")
    failures = sum(r.status == "integrator-failure" for r in records)
    log_event(f"{name} finished: {len(records)} points, {failures} integrator failure(s)")
    log_json(f"{name}_finished", points=len(records), failures=failures)


def run_sweep(
    grid: SweepGrid,
    gate_kind: str | None = None,
    workers: int = 1,
    cache_dir: str | None = None,
    progress: bool = False,
) -> list[SweepRecord]:
    """One record per grid point, in grid order."""
    if gate_kind is not None and gate_kind != grid.spec.gate:
        raise ValueError(f"grid spec is for gate '{grid.spec.gate}', not '{gate_kind}'")

    log_event(f"sweep started: gate={grid.spec.gate} grid={grid.shape[0]}x{grid.shape[1]} workers={workers}")
    log_json("sweep_started", gate=grid.spec.gate, shape=list(grid.shape), config_hash=config_hash(grid.spec))
    records = run_points(grid.spec, grid.points(), workers=workers, cache_dir=cache_dir, progress=progress)
    _log_records("sweep", records)
    return records


def run_error_curves(
    spec: RunSpec,
    variants: tuple[str, ...] = tuple(VARIANTS),
    R_values: list[float] | None = None,
    ratio: float = 3.0,
    workers: int = 1,
    cache_dir: str | None = None,
    progress: bool = False,
) -> dict[str, list[SweepRecord]]:
    """
    F(R) at fixed Omega_c/Omega_p for each decay variant:
    second-intermediate, first-intermediate, no-decay.
    """
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ValueError(f"unknown variant(s) {sorted(unknown)}; expected {list(VARIANTS)}")
    R_values = R_values if R_values is not None else list(axis_values(spec.sweep.R_um))
    points = [(i, float(R), float(ratio)) for i, R in enumerate(R_values)]

    curves = {}
    for variant in variants:
        curves[variant] = run_points(spec, points, variant, workers, cache_dir, progress)
        _log_records(f"error-curve {variant}", curves[variant])
    return curves


def run_blocking_scan(spec: RunSpec, ratios: list[float], decay: bool = False) -> list[dict]:
    """
    One control in |0>, one target in |A>, no interactions: final
    P(|0A>) and P(|0B>) versus Omega_c/Omega_p (EIT blocking threshold).
    """
    single = spec.model_copy(update={
        "gate": "cnotn",
        "layout": spec.layout.model_copy(update={"kind": "single"}),
    })
    rows = []
    for ratio in ratios:
        run = build_run(single, ratio=ratio, decay=decay)
        model = ModelConfig(
            k=1, N=1,
            omega_p_max=run.model.omega_p_max, delta=run.model.delta, omega_c=run.model.omega_c,
            interactions=InteractionTable.zeros(1, 1), t_pi=run.model.t_pi,
            gamma_r=run.model.gamma_r, gamma_p=run.model.gamma_p, gamma_R=run.model.gamma_R,
        )
        traj = evolve(assemble(model), basis_vector("0|A"), opts=run.integrator)
        pops = populations(traj, ["0|A", "0|B"])
        rows.append({
            "ratio": float(ratio),
            "P_0A": float(pops["0|A"][-1]),
            "P_0B": float(pops["0|B"][-1]),
            "norm": float(traj.final_norm),
        })
    return rows


def run_geometry_summary(
    spec: RunSpec,
    ratio: float = 3.1,
    R_ct: float = 6.0,
    targets: tuple[int, ...] = (1, 2, 3, 4),
    c2not2_R_ct: float | None = 3.35,
) -> list[dict]:
    """
    Fidelity for 1..4 targets (single, linear, triangle, square) at fixed
    R_CT, plus the C2NOT2 rhombus whose control-target distance is
    c2not2_R_ct (R_CC = 2 R_CT / sqrt(5)).
    """
    kinds = {1: "single", 2: "linear", 3: "triangle", 4: "square"}
    rows = []
    for n in targets:
        if n not in kinds:
            raise ValueError(f"geometry summary covers 1..4 targets, got {n}")
        layout_spec = spec.model_copy(update={
            "gate": "cnotn",
            "layout": spec.layout.model_copy(update={"kind": kinds[n]}),
        })
        record = evaluate_point(layout_spec, n, R_ct, ratio)
        rows.append({"gate": "cnotn", "layout": kinds[n], "N": n, "R_CT_um": R_ct, **_summary(record)})

    if c2not2_R_ct is not None:
        c2 = parse_config("preset: c2not2\n")
        c2 = c2.model_copy(update={"decay": spec.decay, "integrator": spec.integrator})
        R_cc = 2 * c2not2_R_ct / math.sqrt(5)
        record = evaluate_point(c2, len(rows) + 1, R_cc, ratio)
        rows.append({"gate": "c2not2", "layout": "rhombus", "N": 2, "R_CT_um": c2not2_R_ct, **_summary(record)})

    log_json("geometry_summary", rows=rows)
    return rows


def _summary(record: SweepRecord) -> dict:
    return {
        "fidelity": record.fidelity,
        "leak": record.leak,
        "duration_us": record.duration_us,
        "status": record.status,
    }

import yaml
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from rydgate.config import RunSpec, build_run, parse_config
from rydgate.errors import ConfigError, IntegratorFailure, RydgateError
from rydgate.fidelity import gate_fidelity_run, initial_state, truth_table_check
from rydgate.hamiltonian import assemble
from rydgate.interactions import builtin_coefficients, potential_curves
from rydgate.json_logger import log_json
from rydgate.logger import log_event
from rydgate.propagator import evolve, populations
from rydgate.pulses import schedule_table
from rydgate.units import US


# -------------------------
# Pydantic Models
# -------------------------

class RunRequest(BaseModel):
    """
    A run file given inline: the same keys as the YAML files under configs/.
    An empty mapping runs the default `cnot` preset.
    """
    config: dict = {}
    R_um: float | None = None
    ratio: float | None = None


class SimulateRequest(RunRequest):
    """
    labels: basis labels or patterns with '*', e.g. "1|B*".
    Default: all targets in A or all in B, for every control string in the input.
    """
    labels: list[str] | None = None


class PotentialRequest(BaseModel):
    pairs: list[str] = ["Rb87-Rb87", "Cs133-Cs133", "Cs133-Rb87"]
    R_min_um: float = 2.0
    R_max_um: float = 15.0
    count: int = 131


class FidelityResponse(BaseModel):
    gate: str
    layout: str
    k: int
    N: int
    fidelity: float
    leak: float
    norm_final: float
    duration_us: float
    warnings: list[str]


class TruthTableRowModel(BaseModel):
    input: str
    expected: str
    population: float
    phase: float
    expected_phase: float
    phase_error: float
    norm: float


class TruthTableResponse(BaseModel):
    gate: str
    rows: list[TruthTableRowModel]


# -------------------------
# FastAPI App
# -------------------------

app = FastAPI(title="rydgate")


def _spec(payload: RunRequest) -> RunSpec:
    try:
        return parse_config(yaml.safe_dump(payload.config), source="request")
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=f"{e}: {'; '.join(e.diagnostics)}")


def _run(payload: RunRequest):
    spec = _spec(payload)
    try:
        return spec, build_run(spec, scale_um=payload.R_um, ratio=payload.ratio)
    except (RydgateError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))


# -------------------------
# Health check
# -------------------------

@app.get("/")
def home():
    return {"message": "rydgate API is running!"}


# -------------------------
# Schedule and potentials
# -------------------------

@app.post("/schedule")
def schedule(payload: RunRequest):
    """
    Segment table of the gate schedule for a run file.
    """
    spec, run = _run(payload)
    return {
        "gate": spec.gate,
        "duration_us": run.schedule.duration / US,
        "segments": schedule_table(run.schedule),
    }


@app.post("/potential")
def potential(payload: PotentialRequest):
    """
    V(R) curves in 2pi x MHz. Points at or inside the Le Roy radius are left out.
    """
    if payload.count < 2 or not payload.R_min_um < payload.R_max_um:
        raise HTTPException(status_code=400, detail="need count >= 2 and R_min_um < R_max_um")

    step = (payload.R_max_um - payload.R_min_um) / (payload.count - 1)
    R_values = [payload.R_min_um + i * step for i in range(payload.count)]
    try:
        rows = potential_curves(builtin_coefficients(), payload.pairs, R_values)
    except (KeyError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {"rows": rows}


# -------------------------
# Gate runs
# -------------------------

@app.post("/fidelity", response_model=FidelityResponse)
def fidelity(payload: RunRequest):
    """
    Run the gate on the configured initial state and compare with the target:
    - GHZ (or Bell) state by default
    - product or ideal-gate target on request
    """
    spec, run = _run(payload)
    controls = tuple(spec.initial_controls) if spec.initial_controls else None

    try:
        result = gate_fidelity_run(run.model, run.layout, run.schedule, run.integrator, target=spec.target, controls=controls)
    except IntegratorFailure as e:
        log_event(f"API gate run failed: {e}", level="ERROR")
        raise HTTPException(status_code=500, detail=f"Integration failed: {e}")
    except (RydgateError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))

    log_json("api_fidelity", gate=spec.gate, fidelity=result.fidelity, leak=result.leak)

    return FidelityResponse(
        gate=spec.gate,
        layout=spec.layout.kind,
        k=run.model.k,
        N=run.model.N,
        fidelity=result.fidelity,
        leak=result.leak,
        norm_final=result.norm,
        duration_us=result.duration / US,
        warnings=list(run.warnings),
    )


@app.post("/truthtable", response_model=TruthTableResponse)
def truthtable(payload: RunRequest):
    """
    Population and phase on the expected output for every computational input.
    """
    spec, run = _run(payload)

    try:
        rows = truth_table_check(spec.gate, run.model, run.integrator, run.schedule)
    except IntegratorFailure as e:
        raise HTTPException(status_code=500, detail=f"Integration failed: {e}")

    return TruthTableResponse(
        gate=spec.gate,
        rows=[TruthTableRowModel(**row.as_dict()) for row in rows],
    )


@app.post("/simulate")
def simulate(payload: SimulateRequest):
    """
    Populations at the end of the schedule, plus the final norm.
    """
    spec, run = _run(payload)
    k, N = run.model.k, run.model.N
    controls = tuple(spec.initial_controls) if spec.initial_controls else ("0" * k, "1" * k)
    labels = payload.labels or [f"{bits}|{level * N}" for bits in controls for level in "AB"]

    try:
        psi0 = initial_state(k, N, controls)
        trajectory = evolve(assemble(run.model, run.schedule), psi0, opts=run.integrator)
        final = populations(trajectory, labels)
    except IntegratorFailure as e:
        raise HTTPException(status_code=500, detail=f"Integration failed: {e}")
    except (RydgateError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))

    return {
        "gate": spec.gate,
        "duration_us": run.schedule.duration / US,
        "populations": {label: float(series[-1]) for label, series in final.items()},
        "norm_final": float(trajectory.final_norm),
    }

"""
Run configuration
-----------------

YAML run files validated with pydantic (unknown keys rejected). Units are
part of the key names (`_MHz_2pi`, `_GHz_2pi`, `_um`, `_ns`, `_us`, `_ps`).

A run file names a preset (`cnot` by default, or `c2not2`) and overrides
any of its keys; the merged document is validated and `build_run` turns it
into species, coefficients, layout, interaction table, model, schedule
and integrator options.
"""

import hashlib
import math
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from rydgate.errors import ConfigError
from rydgate.hamiltonian import ModelConfig, blockade_cutoff
from rydgate.interactions import (
    CoefficientSet,
    InteractionTable,
    Layout,
    LayoutKind,
    RegimePolicy,
    builtin_coefficients,
    coefficients_from_entry,
    interaction_table,
    pair_key,
    standard_layout,
)
from rydgate.propagator import IntegratorOptions
from rydgate.pulses import Schedule
from rydgate.species import DATA_DIR, Registry, apply_overrides, builtin_registry, builtin_species
from rydgate.units import GHZ_2PI, MHZ_2PI, NS, PS

PRESETS_FILE = DATA_DIR / "presets.yaml"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ---------------------------
# Schema
# ---------------------------
class LayoutSpec(_Strict):
    kind: LayoutKind = "square"
    scale_um: float = Field(6.8, gt=0)
    species: dict[Literal["control", "target"], str] = {"control": "Cs133", "target": "Rb87"}
    intermediate: Literal["first", "second"] = "second"


class FieldSpec(_Strict):
    omega_p_MHz_2pi: float = Field(50.0, gt=0)
    delta_MHz_2pi: float = Field(1200.0, gt=0)
    ratio: float | None = Field(3.0, ge=0)
    omega_c_MHz_2pi: float | None = Field(None, ge=0)
    t_pi_ns: float = Field(10.0, gt=0)


class DecaySpec(_Strict):
    enabled: bool = True
    target_rydberg: bool = False


class PairOverride(_Strict):
    C3_GHz_um3_2pi: float | None = None
    C6_GHz_um6_2pi: float | None = None
    R_LR_um: float | None = None
    R_vdW_um: float | None = None
    regime: RegimePolicy | None = None
    theta: float | None = None
    phi: float | None = None


class InteractionSpec(_Strict):
    control_target: bool = True
    target_target: bool = True
    control_control: bool = True
    blockade_limit_factor: float | None = Field(None, gt=0)
    regimes: dict[str, RegimePolicy] = {}
    coefficients: dict[str, PairOverride] = {}


class IntegratorSpec(_Strict):
    method: Literal["rk4-fixed", "expm-segment", "rk4-lawson"] = "rk4-fixed"
    step_pi_ps: float = Field(0.5, gt=0)
    step_raman_ps: float = Field(5.0, gt=0)
    raman_substeps: int | None = Field(None, ge=1)
    record_stride: int = Field(1000, ge=1)
    stiff_limit: float = Field(1.0, gt=0)


class AxisSpec(_Strict):
    min: float
    max: float
    count: int = Field(25, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "AxisSpec":
        if self.count > 1 and not self.min < self.max:
            raise ValueError(f"axis min ({self.min}) must be below max ({self.max})")
        return self


class SweepSpec(_Strict):
    R_um: AxisSpec = AxisSpec(min=5.0, max=10.0, count=25)
    ratio: AxisSpec = AxisSpec(min=1.0, max=4.0, count=25)
    workers: int = Field(1, ge=1)
    cache: bool = False


class OutputSpec(_Strict):
    dir: str = "results"


class RunSpec(_Strict):
    preset: Literal["cnot", "c2not2"] = "cnot"
    gate: Literal["cnotn", "c2not2"] = "cnotn"
    layout: LayoutSpec = LayoutSpec()
    fields: FieldSpec = FieldSpec()
    decay: DecaySpec = DecaySpec()
    interactions: InteractionSpec = InteractionSpec()
    species_overrides: dict[str, dict] = {}
    integrator: IntegratorSpec = IntegratorSpec()
    sweep: SweepSpec = SweepSpec()
    target: Literal["ghz", "product", "ideal"] = "ghz"
    initial_controls: list[str] | None = None
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _gate_matches_layout(self) -> "RunSpec":
        if self.gate == "c2not2" and self.layout.kind != "rhombus":
            raise ValueError("gate c2not2 needs the rhombus layout")
        if self.gate == "cnotn" and self.layout.kind == "rhombus":
            raise ValueError("the rhombus layout has two controls; use gate c2not2")
        return self


# ---------------------------
# Loading
# ---------------------------
@lru_cache(maxsize=1)
def _presets() -> dict:
    with open(PRESETS_FILE, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)["presets"]


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _line_of(root: yaml.Node | None, loc: tuple) -> int | None:
    """1-based line of the YAML key addressed by a pydantic error location."""
    if root is None:
        return None
    node, line = root, None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == str(key):
                    line, node = key_node.start_mark.line + 1, value_node
                    break
            else:
                break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_config(text: str, source: str = "<string>") -> RunSpec:
    """Validate run-file text; schema errors carry the YAML line."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: not valid YAML", [str(e)]) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")

    preset = data.get("preset", "cnot")
    presets = _presets()
    if preset not in presets:
        line = _line_of(root, ("preset",))
        raise ConfigError(f"{source}: invalid run file", [f"line {line}: preset: unknown preset '{preset}'"])

    merged = deep_merge(presets[preset], data)
    merged["preset"] = preset
    try:
        return RunSpec.model_validate(merged)
    except ValidationError as e:
        diagnostics = []
        for err in e.errors():
            loc = tuple(p for p in err["loc"] if not str(p).startswith("function-after"))
            where = ".".join(str(p) for p in loc) or "(top level)"
            line = _line_of(root, loc)
            prefix = f"line {line}: " if line else ""
            diagnostics.append(f"{prefix}{where}: {err['msg']}")
        raise ConfigError(f"{source}: invalid run file", diagnostics) from None


def load_config(path: str | Path | None = None) -> RunSpec:
    """Load a run file; None gives the default `cnot` preset."""
    if path is None:
        return parse_config("")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def preset_spec(name: str) -> RunSpec:
    return parse_config(f"preset: {name}\n")


def config_hash(spec: RunSpec) -> str:
    payload = json.dumps(spec.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------
# Building a run
# ---------------------------
@dataclass(frozen=True)
class Run:
    spec: RunSpec
    registry: Registry
    coefficients: CoefficientSet
    layout: Layout
    interactions: InteractionTable
    model: ModelConfig
    schedule: Schedule
    integrator: IntegratorOptions

    @property
    def gate(self) -> str:
        return self.spec.gate

    @property
    def warnings(self) -> tuple[str, ...]:
        return self.interactions.warnings


def build_coefficients(spec: RunSpec) -> CoefficientSet:
    coeffs = builtin_coefficients()
    for pair, override in spec.interactions.coefficients.items():
        a, b = pair.split("-")
        key = pair_key(a, b)
        base = {}
        if key in coeffs.pairs:
            current = coeffs.pairs[key]
            base = {
                "C3_GHz_um3_2pi": current.C3 / GHZ_2PI,
                "C6_GHz_um6_2pi": current.C6 / GHZ_2PI,
                "R_LR_um": current.R_LR,
                "R_vdW_um": current.R_vdW,
                "regime": current.regime_policy,
                "theta": current.theta,
                "phi": current.phi,
            }
        entry = {**base, **override.model_dump(exclude_none=True)}
        try:
            coeffs = coeffs.replace(coefficients_from_entry(key, entry))
        except KeyError as e:
            raise ConfigError(f"coefficients for new pair {key} need {e}") from None
    for pair, policy in spec.interactions.regimes.items():
        a, b = pair.split("-")
        coeffs = coeffs.replace(coeffs.get(a, b).with_regime(policy))
    return coeffs


def integrator_options(spec: RunSpec) -> IntegratorOptions:
    i = spec.integrator
    return IntegratorOptions(
        method=i.method,
        step_pi=i.step_pi_ps * PS,
        step_raman=i.step_raman_ps * PS,
        raman_substeps=i.raman_substeps,
        record_stride=i.record_stride,
        stiff_limit=i.stiff_limit,
    )


def build_run(
    spec: RunSpec,
    scale_um: float | None = None,
    ratio: float | None = None,
    intermediate: str | None = None,
    decay: bool | None = None,
) -> Run:
    """
    Deterministically construct everything a gate run needs. The keyword
    arguments override the spec (used by sweeps and error curves).
    """
    registry = apply_overrides(builtin_registry(), spec.species_overrides)
    coefficients = build_coefficients(spec)
    choice = intermediate or spec.layout.intermediate
    species_map = {role: builtin_species(name, choice, registry=registry) for role, name in spec.layout.species.items()}

    layout = standard_layout(
        spec.layout.kind,
        scale_um if scale_um is not None else spec.layout.scale_um,
        species_map,
    )

    f = spec.fields
    omega_p = f.omega_p_MHz_2pi * MHZ_2PI
    delta = f.delta_MHz_2pi * MHZ_2PI
    if ratio is not None:
        omega_c = ratio * omega_p
    elif f.omega_c_MHz_2pi is not None:
        omega_c = f.omega_c_MHz_2pi * MHZ_2PI
    else:
        omega_c = (f.ratio if f.ratio is not None else 3.0) * omega_p

    flags = spec.interactions
    cutoff = None
    if flags.blockade_limit_factor is not None:
        v_ct = flags.blockade_limit_factor * omega_c
        table = InteractionTable.blockade_limit(layout.k, layout.N, v_ct)
        cutoff = blockade_cutoff(v_ct, max(delta, omega_p, omega_c, math.pi / (f.t_pi_ns * NS)))
    else:
        table = interaction_table(
            layout,
            coefficients,
            include_ct=flags.control_target,
            include_tt=flags.target_target,
            include_cc=flags.control_control,
        )

    model = ModelConfig.from_layout(
        layout,
        table,
        omega_p_max=omega_p,
        delta=delta,
        omega_c=omega_c,
        t_pi=f.t_pi_ns * NS,
        decay=spec.decay.enabled if decay is None else decay,
        target_rydberg_decay=spec.decay.target_rydberg,
        shift_cutoff=cutoff,
    )

    return Run(
        spec=spec,
        registry=registry,
        coefficients=coefficients,
        layout=layout,
        interactions=table,
        model=model,
        schedule=model.schedule(),
        integrator=integrator_options(spec),
    )

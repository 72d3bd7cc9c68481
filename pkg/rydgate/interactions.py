"""
Geometry and Rydberg-Rydberg interactions
-----------------------------------------

- Atom layouts (single target, linear, triangle, square, rhombus)
- Pair coefficients C3, C6 with Le Roy and van der Waals radii
- V(R) = C3/R^3 (dipole-dipole) or C6/R^6 (van der Waals)
- Pairwise interaction tables consumed by the Hamiltonian builder

Coefficients are stored in rad/s * um^n, distances in um.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from rydgate.errors import ValidityError
from rydgate.species import DATA_DIR, SpeciesSpec, builtin_species, canonical_name
from rydgate.units import GHZ_2PI, to_mhz_2pi

COEFFICIENTS_FILE = DATA_DIR / "pair_coefficients.yaml"

RegimePolicy = Literal["dipole-dipole", "van-der-waals", "auto-crossover"]
LayoutKind = Literal["single", "linear", "triangle", "square", "rhombus"]
LAYOUT_KINDS = ("single", "linear", "triangle", "square", "rhombus")

DEFAULT_SPECIES = {"control": "Cs133", "target": "Rb87"}


def pair_key(a: str, b: str) -> str:
    """Unordered pair key, e.g. pair_key("Rb", "Cs133") -> "Cs133-Rb87"."""
    return "-".join(sorted((canonical_name(a), canonical_name(b))))


# ---------------------------
# Pair coefficients
# ---------------------------
class PairCoefficients(BaseModel):
    model_config = ConfigDict(frozen=True)

    species_pair: tuple[str, str]
    C3: float          # rad/s um^3
    C6: float          # rad/s um^6
    R_LR: float        # um
    R_vdW: float       # um
    regime_policy: RegimePolicy
    theta: float = math.pi / 2
    phi: float = 0.0

    @field_validator("C3", "C6", "R_LR", "R_vdW")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"must be > 0, got {value}")
        return value

    @model_validator(mode="after")
    def _radii_order(self) -> "PairCoefficients":
        if not self.R_LR < self.R_vdW:
            raise ValueError(f"R_LR ({self.R_LR} um) must be below R_vdW ({self.R_vdW} um)")
        return self

    @property
    def name(self) -> str:
        return "-".join(self.species_pair)

    def with_regime(self, policy: RegimePolicy) -> "PairCoefficients":
        return PairCoefficients(**{**self.model_dump(), "regime_policy": policy})


class CoefficientSet(BaseModel):
    """Coefficients for every species pair, keyed by pair_key()."""
    model_config = ConfigDict(frozen=True)

    pairs: dict[str, PairCoefficients]

    def get(self, a: str, b: str) -> PairCoefficients:
        key = pair_key(a, b)
        if key not in self.pairs:
            raise KeyError(f"no interaction coefficients for pair {key}; known: {sorted(self.pairs)}")
        return self.pairs[key]

    def replace(self, coeffs: PairCoefficients) -> "CoefficientSet":
        pairs = dict(self.pairs)
        pairs[pair_key(*coeffs.species_pair)] = coeffs
        return CoefficientSet(pairs=pairs)


def coefficients_from_entry(key: str, entry: dict) -> PairCoefficients:
    a, b = key.split("-")
    return PairCoefficients(
        species_pair=tuple(pair_key(a, b).split("-")),
        C3=float(entry["C3_GHz_um3_2pi"]) * GHZ_2PI,
        C6=float(entry["C6_GHz_um6_2pi"]) * GHZ_2PI,
        R_LR=float(entry["R_LR_um"]),
        R_vdW=float(entry["R_vdW_um"]),
        regime_policy=entry.get("regime", "auto-crossover"),
        theta=float(entry.get("theta", math.pi / 2)),
        phi=float(entry.get("phi", 0.0)),
    )


def load_coefficients(path: str | Path | None = None) -> CoefficientSet:
    path = Path(path) if path else COEFFICIENTS_FILE
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if data.get("version") != 1:
        raise ValueError(f"unsupported coefficient file version {data.get('version')!r}")
    pairs = {}
    for key, entry in data.get("pairs", {}).items():
        coeffs = coefficients_from_entry(key, entry)
        pairs[coeffs.name] = coeffs
    return CoefficientSet(pairs=pairs)


@lru_cache(maxsize=1)
def builtin_coefficients() -> CoefficientSet:
    return load_coefficients()


def builtin_pair(pair: str | tuple[str, str]) -> PairCoefficients:
    """
    Table values for Rb-Rb, Cs-Cs and Rb-Cs (aliases accepted in any order).
    """
    if isinstance(pair, str):
        parts = pair.split("-")
        if len(parts) != 2:
            raise ValueError(f"pair '{pair}' must look like 'Rb-Cs'")
        pair = (parts[0], parts[1])
    try:
        return builtin_coefficients().get(*pair)
    except KeyError as e:
        raise ValueError(str(e)) from None


# ---------------------------
# Pair potential
# ---------------------------
@dataclass(frozen=True)
class Potential:
    value: float                  # rad/s
    regime: str                   # "dipole-dipole" | "van-der-waals"
    warning: str | None = None

    def __float__(self) -> float:
        return self.value


def _regime_at(coeffs: PairCoefficients, R: float) -> str:
    if coeffs.regime_policy == "auto-crossover":
        return "dipole-dipole" if R < coeffs.R_vdW else "van-der-waals"
    return coeffs.regime_policy


def pair_potential(coeffs: PairCoefficients, R: float) -> Potential:
    """
    V(R) for one pair. R <= R_LR raises ValidityError; a fixed regime
    used outside its range returns the value with a warning attached.
    """
    if R <= coeffs.R_LR:
        raise ValidityError(
            f"R = {R:g} um is at or below the Le Roy radius R_LR = {coeffs.R_LR:g} um "
            f"for {coeffs.name}"
        )

    regime = _regime_at(coeffs, R)
    warning = None
    if regime == "dipole-dipole":
        value = coeffs.C3 / R**3
        if coeffs.regime_policy == "dipole-dipole" and R >= coeffs.R_vdW:
            warning = f"{coeffs.name}: C3/R^3 used at R = {R:g} um beyond R_vdW = {coeffs.R_vdW:g} um"
    else:
        value = coeffs.C6 / R**6
        if coeffs.regime_policy == "van-der-waals" and R < coeffs.R_vdW:
            warning = f"{coeffs.name}: C6/R^6 used at R = {R:g} um below R_vdW = {coeffs.R_vdW:g} um"

    return Potential(value=value, regime=regime, warning=warning)


def pair_potential_gradient(coeffs: PairCoefficients, R: float) -> float:
    """dV/dR in rad/s per um."""
    potential = pair_potential(coeffs, R)
    power = 3 if potential.regime == "dipole-dipole" else 6
    return -power * potential.value / R


def potential_curves(
    coeff_set: CoefficientSet,
    pairs: list[str],
    R_values: np.ndarray,
) -> list[dict]:
    """
    Rows (pair, R_um, V_MHz_over_2pi, regime) for V(R) plots.
    Radii at or below the Le Roy radius are skipped.
    """
    rows = []
    for pair in pairs:
        a, b = pair.split("-")
        coeffs = coeff_set.get(a, b)
        for R in R_values:
            R = float(R)
            if R <= coeffs.R_LR:
                continue
            potential = pair_potential(coeffs, R)
            rows.append({
                "pair": coeffs.name,
                "R_um": R,
                "V_MHz_over_2pi": to_mhz_2pi(potential.value),
                "regime": potential.regime,
            })
    return rows


# ---------------------------
# Layouts
# ---------------------------
class Atom(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: Literal["control", "target"]
    species: SpeciesSpec
    position: tuple[float, float, float]  # um


class Layout(BaseModel):
    """
    Control and target atoms in the z = 0 plane (quantization axis along z).
    Controls are numbered in order of appearance, targets likewise.
    """
    model_config = ConfigDict(frozen=True)

    atoms: tuple[Atom, ...]

    @model_validator(mode="after")
    def _check(self) -> "Layout":
        roles = [a.role for a in self.atoms]
        if "control" not in roles or "target" not in roles:
            raise ValueError("layout needs at least one control and one target atom")
        for atom in self.atoms:
            if abs(atom.position[2]) > 1e-12:
                raise ValueError(f"atom at {atom.position} is off the z = 0 plane")
        positions = np.array([a.position for a in self.atoms])
        for i in range(len(positions)):
            for j in range(i + 1, len(positions)):
                if np.linalg.norm(positions[i] - positions[j]) <= 0:
                    raise ValueError(f"atoms {i} and {j} share position {self.atoms[i].position}")
        return self

    @property
    def controls(self) -> list[Atom]:
        return [a for a in self.atoms if a.role == "control"]

    @property
    def targets(self) -> list[Atom]:
        return [a for a in self.atoms if a.role == "target"]

    @property
    def k(self) -> int:
        return len(self.controls)

    @property
    def N(self) -> int:
        return len(self.targets)

    @staticmethod
    def distance(a: Atom, b: Atom) -> float:
        return float(np.linalg.norm(np.subtract(a.position, b.position)))


def _resolve_species(value: SpeciesSpec | str, intermediate_choice: str) -> SpeciesSpec:
    if isinstance(value, SpeciesSpec):
        return value
    return builtin_species(value, intermediate_choice)


def standard_layout(
    kind: LayoutKind,
    scale: float,
    species_map: dict[str, SpeciesSpec | str] | None = None,
    intermediate_choice: str = "second",
) -> Layout:
    """
    Build one of the standard arrangements. `scale` is R_CT (um) for the
    one-control layouts and R_CC for the rhombus (where R_TT = 2 R_CC).
    Default species: Cs control, Rb targets.
    """
    if kind not in LAYOUT_KINDS:
        raise ValueError(f"unknown layout kind '{kind}'; expected one of {LAYOUT_KINDS}")
    if not scale > 0:
        raise ValueError(f"layout scale must be > 0, got {scale}")

    species_map = {**DEFAULT_SPECIES, **(species_map or {})}
    control_species = _resolve_species(species_map["control"], intermediate_choice)
    target_species = _resolve_species(species_map["target"], intermediate_choice)

    R = float(scale)
    if kind == "rhombus":
        controls = [(0.0, R / 2, 0.0), (0.0, -R / 2, 0.0)]
        targets = [(R, 0.0, 0.0), (-R, 0.0, 0.0)]
    else:
        controls = [(0.0, 0.0, 0.0)]
        targets = {
            "single": [(R, 0.0, 0.0)],
            "linear": [(R, 0.0, 0.0), (-R, 0.0, 0.0)],
            "triangle": [(-R, 0.0, 0.0), (0.0, R, 0.0), (R / math.sqrt(2), -R / math.sqrt(2), 0.0)],
            "square": [(R, 0.0, 0.0), (0.0, R, 0.0), (-R, 0.0, 0.0), (0.0, -R, 0.0)],
        }[kind]

    atoms = [Atom(role="control", species=control_species, position=p) for p in controls]
    atoms += [Atom(role="target", species=target_species, position=p) for p in targets]
    return Layout(atoms=tuple(atoms))


# ---------------------------
# Interaction tables
# ---------------------------
@dataclass(frozen=True)
class InteractionTable:
    """
    Pairwise interaction energies (rad/s):
    - control_target: (k, N)
    - target_target: (N, N), symmetric, zero diagonal
    - control_control: (k, k), symmetric, zero diagonal
    """
    control_target: np.ndarray
    target_target: np.ndarray
    control_control: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        k, N = self.control_target.shape
        if self.target_target.shape != (N, N) or self.control_control.shape != (k, k):
            raise ValueError("interaction table blocks have inconsistent shapes")
        for block in (self.control_target, self.target_target, self.control_control):
            block.setflags(write=False)

    @property
    def k(self) -> int:
        return self.control_target.shape[0]

    @property
    def N(self) -> int:
        return self.control_target.shape[1]

    @classmethod
    def zeros(cls, k: int, N: int) -> "InteractionTable":
        return cls(np.zeros((k, N)), np.zeros((N, N)), np.zeros((k, k)))

    @classmethod
    def blockade_limit(cls, k: int, N: int, v_ct: float) -> "InteractionTable":
        """Control-target interaction only, all other pairs zero."""
        return cls(np.full((k, N), float(v_ct)), np.zeros((N, N)), np.zeros((k, k)))

    def full(self) -> np.ndarray:
        """(k+N, k+N) symmetric table, controls first."""
        k, N = self.k, self.N
        out = np.zeros((k + N, k + N))
        out[:k, :k] = self.control_control
        out[:k, k:] = self.control_target
        out[k:, :k] = self.control_target.T
        out[k:, k:] = self.target_target
        return out


def interaction_table(
    layout: Layout,
    coeff_set: CoefficientSet | None = None,
    include_ct: bool = True,
    include_tt: bool = True,
    include_cc: bool = True,
) -> InteractionTable:
    """
    Evaluate pair_potential for every pair of atoms in the layout.
    Disabled blocks are exactly zero. Validity errors propagate.
    """
    coeff_set = coeff_set if coeff_set is not None else builtin_coefficients()
    controls, targets = layout.controls, layout.targets
    k, N = len(controls), len(targets)
    warnings: list[str] = []

    def V(a: Atom, b: Atom) -> float:
        potential = pair_potential(coeff_set.get(a.species.name, b.species.name), Layout.distance(a, b))
        if potential.warning:
            warnings.append(potential.warning)
        return potential.value

    ct = np.zeros((k, N))
    tt = np.zeros((N, N))
    cc = np.zeros((k, k))

    if include_ct:
        for i, c in enumerate(controls):
            for j, t in enumerate(targets):
                ct[i, j] = V(c, t)
    if include_tt:
        for i in range(N):
            for j in range(i + 1, N):
                tt[i, j] = tt[j, i] = V(targets[i], targets[j])
    if include_cc:
        for i in range(k):
            for j in range(i + 1, k):
                cc[i, j] = cc[j, i] = V(controls[i], controls[j])

    return InteractionTable(ct, tt, cc, tuple(dict.fromkeys(warnings)))

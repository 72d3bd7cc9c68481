"""
Species registry
----------------

Atomic species, their Rydberg and intermediate states, lifetimes, and the
decay rates derived from them (gamma = 1 / lifetime, angular units s^-1).

The registry ships as a versioned YAML file (rydgate/data/species.yaml).
Lifetimes carry their unit in the key name; `.inf` switches a decay
channel off, which stays distinguishable from a very short lifetime.
"""

import math
from functools import lru_cache
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, field_validator

DATA_DIR = Path(__file__).parent / "data"
SPECIES_FILE = DATA_DIR / "species.yaml"
REGISTRY_VERSION = 1

LIFETIME_UNITS = {
    "lifetime_s": 1.0,
    "lifetime_ms": 1e-3,
    "lifetime_us": 1e-6,
    "lifetime_ns": 1e-9,
}

ALIASES = {"Rb": "Rb87", "Cs": "Cs133"}

IntermediateChoice = Literal["first", "second"]


def _positive_lifetime(value: float) -> float:
    if not value > 0:
        raise ValueError(f"lifetime must be > 0 (use .inf to disable decay), got {value}")
    return value


class SpeciesSpec(BaseModel):
    """
    One species with a chosen intermediate level. Lifetimes in seconds.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    element: str
    rydberg_label: str
    rydberg_lifetime: float
    intermediate_choice: IntermediateChoice = "second"
    intermediate_label: str
    intermediate_lifetime: float

    _check_rydberg = field_validator("rydberg_lifetime")(_positive_lifetime)
    _check_intermediate = field_validator("intermediate_lifetime")(_positive_lifetime)

    @property
    def gamma_r(self) -> float:
        return 1.0 / self.rydberg_lifetime

    @property
    def gamma_p(self) -> float:
        return 1.0 / self.intermediate_lifetime


class IntermediateLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    lifetime: float

    _check = field_validator("lifetime")(_positive_lifetime)


class SpeciesRecord(BaseModel):
    """Registry entry: a species with both candidate intermediate levels."""
    model_config = ConfigDict(frozen=True)

    name: str
    element: str
    rydberg_label: str
    rydberg_lifetime: float
    intermediates: dict[str, IntermediateLevel]

    _check = field_validator("rydberg_lifetime")(_positive_lifetime)

    def resolve(self, choice: str = "second") -> SpeciesSpec:
        if choice not in self.intermediates:
            raise ValueError(
                f"unknown intermediate choice '{choice}' for {self.name}; "
                f"expected one of {sorted(self.intermediates)}"
            )
        level = self.intermediates[choice]
        return SpeciesSpec(
            name=self.name,
            element=self.element,
            rydberg_label=self.rydberg_label,
            rydberg_lifetime=self.rydberg_lifetime,
            intermediate_choice=choice,
            intermediate_label=level.label,
            intermediate_lifetime=level.lifetime,
        )


Registry = dict[str, SpeciesRecord]


# ---------------------------
# File format helpers
# ---------------------------
def read_lifetime(entry: dict, prefix: str = "") -> float:
    """
    Pick exactly one '<prefix>lifetime_<unit>' key from a YAML mapping
    and return the value in seconds.
    """
    found = [key for key in LIFETIME_UNITS if prefix + key in entry]
    if len(found) != 1:
        options = ", ".join(prefix + key for key in LIFETIME_UNITS)
        raise ValueError(f"expected exactly one of {options}, got {sorted(entry)}")
    key = found[0]
    return float(entry[prefix + key]) * LIFETIME_UNITS[key]


def _record_from_entry(name: str, entry: dict) -> SpeciesRecord:
    allowed = {"element", "rydberg_label", "intermediates"} | {"rydberg_" + k for k in LIFETIME_UNITS}
    unknown = set(entry) - allowed
    if unknown:
        raise ValueError(f"species '{name}': unknown key(s) {sorted(unknown)}")

    intermediates = {}
    for choice, level in (entry.get("intermediates") or {}).items():
        extra = set(level) - ({"label"} | set(LIFETIME_UNITS))
        if extra:
            raise ValueError(f"species '{name}', intermediate '{choice}': unknown key(s) {sorted(extra)}")
        intermediates[choice] = IntermediateLevel(label=level["label"], lifetime=read_lifetime(level))

    return SpeciesRecord(
        name=name,
        element=entry["element"],
        rydberg_label=entry["rydberg_label"],
        rydberg_lifetime=read_lifetime(entry, prefix="rydberg_"),
        intermediates=intermediates,
    )


def parse_registry(text: str) -> Registry:
    data = yaml.safe_load(text) or {}
    version = data.get("version")
    if version != REGISTRY_VERSION:
        raise ValueError(f"unsupported species registry version {version!r}")
    return {name: _record_from_entry(name, entry) for name, entry in data.get("species", {}).items()}


def load_registry(path: str | Path | None = None) -> Registry:
    path = Path(path) if path else SPECIES_FILE
    with open(path, "r", encoding="utf-8") as f:
        return parse_registry(f.read())


def dump_registry(registry: Registry) -> str:
    """Serialize with lifetimes in seconds; parse_registry(dump_registry(r)) == r."""
    species = {name: _record_to_entry(record) for name, record in registry.items()}
    return yaml.safe_dump({"version": REGISTRY_VERSION, "species": species}, sort_keys=False)


def _record_to_entry(record: SpeciesRecord) -> dict:
    return {
        "element": record.element,
        "rydberg_label": record.rydberg_label,
        "rydberg_lifetime_s": record.rydberg_lifetime,
        "intermediates": {
            choice: {"label": level.label, "lifetime_s": level.lifetime}
            for choice, level in record.intermediates.items()
        },
    }


def _replace_lifetime(base: dict, override: dict, prefix: str = "") -> dict:
    merged = dict(base)
    if any(prefix + key in override for key in LIFETIME_UNITS):
        for key in LIFETIME_UNITS:
            merged.pop(prefix + key, None)
    for key, value in override.items():
        if key != "intermediates":
            merged[key] = value
    return merged


def apply_overrides(registry: Registry, overrides: dict[str, dict]) -> Registry:
    """
    Merge run-file overrides (same keys as the data file) into a registry.
    Unknown species names add new entries.
    """
    out = dict(registry)
    for name, override in overrides.items():
        key = canonical_name(name)
        base = _record_to_entry(out[key]) if key in out else {}
        entry = _replace_lifetime(base, override, prefix="rydberg_")

        intermediates = dict(base.get("intermediates", {}))
        for choice, level in (override.get("intermediates") or {}).items():
            intermediates[choice] = _replace_lifetime(intermediates.get(choice, {}), level)
        entry["intermediates"] = intermediates

        try:
            out[key] = _record_from_entry(key, entry)
        except KeyError as e:
            raise ValueError(f"species override '{name}' is missing {e}") from None
    return out


@lru_cache(maxsize=1)
def builtin_registry() -> Registry:
    return load_registry()


def canonical_name(name: str) -> str:
    return ALIASES.get(name, name)


# ---------------------------
# Public operations
# ---------------------------
def builtin_species(name: str, intermediate_choice: str = "second", registry: Registry | None = None) -> SpeciesSpec:
    """
    Look up a species. The second resonance level is the default
    intermediate state (longer lifetime).
    """
    registry = registry if registry is not None else builtin_registry()
    key = canonical_name(name)
    if key not in registry:
        raise ValueError(f"unknown species '{name}'; known: {sorted(registry)}")
    return registry[key].resolve(intermediate_choice)


def decay_rates(spec: SpeciesSpec) -> tuple[float, float]:
    """(gamma_r, gamma_p) in s^-1; an infinite lifetime gives exactly 0."""
    gamma_r = 0.0 if math.isinf(spec.rydberg_lifetime) else 1.0 / spec.rydberg_lifetime
    gamma_p = 0.0 if math.isinf(spec.intermediate_lifetime) else 1.0 / spec.intermediate_lifetime
    return gamma_r, gamma_p

"""
Fidelity metrics
----------------

- Projection of the full state onto the computational subspace
  {0,1}^k x {A,B}^N (not renormalized, so leakage and decay count)
- Uhlmann fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho))
- GHZ / product targets and the ideal truth tables of CNOT^N and C2NOT2
- Gate runs: evolve the superposition input, project, compare

Phase convention of the ideal gate: every control excited to |r> and
brought back picks up -1, and every target flipped by the Raman pulse
picks up -1. A row whose targets flip therefore carries
(-1)^(excited controls) * (-1)^N; all other rows carry +1.
"""

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from rydgate.errors import ValidityError
from rydgate.hamiltonian import ModelConfig, assemble
from rydgate.hilbert import BasisLabel, basis_vector, flat_index, hilbert_dim, local_dims
from rydgate.interactions import Layout
from rydgate.propagator import IntegratorOptions, Trajectory, evolve
from rydgate.pulses import Schedule

PSD_TOLERANCE = -1e-10

GateKind = Literal["cnotn", "c2not2"]
TargetKind = Literal["ghz", "product", "ideal"]

CONTROL_BITS = ("0", "1")
TARGET_BITS = ("A", "B")


# ---------------------------
# Computational subspace
# ---------------------------
def computational_labels(k: int, N: int) -> list[BasisLabel]:
    """All 2^(k+N) computational labels, controls most significant, 0 < 1 and A < B."""
    hilbert_dim(k, N)
    return [
        BasisLabel(control_levels=c, target_levels=t)
        for c in itertools.product(CONTROL_BITS, repeat=k)
        for t in itertools.product(TARGET_BITS, repeat=N)
    ]


def computational_index(label: BasisLabel) -> int:
    index = 0
    for level in label.control_levels + label.target_levels:
        if level not in ("0", "1", "A", "B"):
            raise ValueError(f"label {label} is outside the computational subspace")
        index = 2 * index + (level in ("1", "B"))
    return index


@dataclass(frozen=True)
class ComputationalProjection:
    amplitudes: np.ndarray   # length 2^(k+N), not renormalized
    leak: float              # 1 - |reduced|^2 / |psi|^2
    norm: float              # |psi|^2 before projection

    @property
    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def project_computational(psi: np.ndarray, k: int, N: int) -> ComputationalProjection:
    psi = np.asarray(psi, dtype=complex)
    dims = local_dims(k, N)
    if psi.shape != (hilbert_dim(k, N),):
        raise ValueError(f"state has shape {psi.shape}, expected ({hilbert_dim(k, N)},)")

    reduced = psi.reshape(dims)[(slice(0, 2),) * len(dims)].reshape(-1).copy()
    norm = float(np.vdot(psi, psi).real)
    kept = float(np.vdot(reduced, reduced).real)
    leak = 1.0 - kept / norm if norm > 0 else 1.0
    return ComputationalProjection(reduced, min(max(leak, 0.0), 1.0), norm)


# ---------------------------
# Fidelity
# ---------------------------
def _hermitian_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _is_pure(sigma: np.ndarray, tol: float = 1e-10) -> bool:
    trace = np.trace(sigma).real
    return abs(np.trace(sigma @ sigma).real - trace**2) < tol and abs(trace - 1.0) < tol


def fidelity(rho: np.ndarray, sigma: np.ndarray, method: Literal["auto", "pure", "general"] = "auto") -> float:
    """
    F(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho)).
    For pure sigma = |phi><phi| this is sqrt(<phi|rho|phi>).
    rho may have trace < 1 (projected, leaked states).
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"rho {rho.shape} and sigma {sigma.shape} must be square and equal-sized")

    rho = 0.5 * (rho + rho.conj().T)
    eigenvalues = np.linalg.eigvalsh(rho)
    if eigenvalues.min() < PSD_TOLERANCE:
        raise ValidityError(f"rho is not positive semidefinite (min eigenvalue {eigenvalues.min():.3e})")
    if eigenvalues.sum() > 1.0 + 1e-9:
        raise ValidityError(f"rho has trace {eigenvalues.sum():.12f} > 1")

    if method == "pure" or (method == "auto" and _is_pure(sigma)):
        overlap = np.trace(rho @ sigma).real
        return float(math.sqrt(max(overlap, 0.0)))

    root = _hermitian_sqrt(rho)
    inner = root @ sigma @ root
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


# ---------------------------
# Ideal gates and targets
# ---------------------------
def _check_gate(gate: str, k: int, N: int) -> None:
    if gate == "cnotn":
        if k != 1:
            raise ValueError(f"CNOT^N has one control, got k={k}")
    elif gate == "c2not2":
        if (k, N) != (2, 2):
            raise ValueError(f"C2NOT2 needs k=2, N=2, got k={k}, N={N}")
    else:
        raise ValueError(f"unknown gate '{gate}'; expected 'cnotn' or 'c2not2'")


def ideal_output(gate: GateKind, label: str | BasisLabel) -> tuple[BasisLabel, int]:
    """
    Expected output label and phase (+1/-1) for one computational input.
    Targets flip when at least one control is |1>.
    """
    if isinstance(label, str):
        label = BasisLabel.parse(label)
    computational_index(label)
    _check_gate(gate, label.k, label.N)

    excited = label.control_levels.count("1")
    if excited == 0:
        return label, 1

    flipped = tuple("B" if t == "A" else "A" for t in label.target_levels)
    phase = (-1) ** excited * (-1) ** label.N
    return BasisLabel(control_levels=label.control_levels, target_levels=flipped), phase


def ideal_gate_matrix(gate: GateKind, k: int, N: int) -> np.ndarray:
    _check_gate(gate, k, N)
    labels = computational_labels(k, N)
    matrix = np.zeros((len(labels), len(labels)))
    for column, label in enumerate(labels):
        out, phase = ideal_output(gate, label)
        matrix[computational_index(out), column] = phase
    return matrix


def ghz_phase(k: int, N: int) -> int:
    """Phase of the |1..1>|B..B> branch produced by the ideal schedule."""
    return (-1) ** k * (-1) ** N


@dataclass(frozen=True)
class TargetState:
    kind: Literal["bell", "ghz", "product", "ideal"]
    k: int
    N: int
    amplitudes: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def ghz_target(k: int, N: int) -> TargetState:
    """(|0..0>|A^N> + s |1..1>|B^N>) / sqrt(2) with s = ghz_phase(k, N)."""
    if k not in (1, 2):
        raise ValueError(f"GHZ target supports k = 1 or 2, got k={k}")
    amplitudes = np.zeros(2 ** (k + N), dtype=complex)
    amplitudes[0] = 1 / math.sqrt(2)
    amplitudes[-1] = ghz_phase(k, N) / math.sqrt(2)
    return TargetState("bell" if k + N == 2 else "ghz", k, N, amplitudes)


def product_target(k: int, N: int) -> TargetState:
    """Separable (|0>+|1>)^k (|A>+|B>)^N, normalized."""
    n = k + N
    amplitudes = np.full(2**n, 1 / math.sqrt(2**n), dtype=complex)
    return TargetState("product", k, N, amplitudes)


def initial_state(k: int, N: int, controls: tuple[str, ...] | None = None) -> np.ndarray:
    """
    Equal superposition of the given control bit strings, targets in |A^N>.
    Default: (|0..0> + |1..1>) / sqrt(2).
    """
    controls = controls or ("0" * k, "1" * k)
    psi = np.zeros(hilbert_dim(k, N), dtype=complex)
    for bits in controls:
        if len(bits) != k or set(bits) - set(CONTROL_BITS):
            raise ValueError(f"control bits '{bits}' do not fit k={k}")
        psi += basis_vector(f"{bits}|{'A' * N}")
    return psi / math.sqrt(len(controls))


def ideal_target(gate: GateKind, k: int, N: int, controls: tuple[str, ...] | None = None) -> TargetState:
    """Ideal gate applied to initial_state(k, N, controls)."""
    psi = initial_state(k, N, controls)
    reduced = project_computational(psi, k, N).amplitudes
    return TargetState("ideal", k, N, ideal_gate_matrix(gate, k, N) @ reduced)


# ---------------------------
# Truth tables
# ---------------------------
@dataclass(frozen=True)
class TruthTableRow:
    input: str
    expected: str
    population: float
    phase: float            # rad, of the expected-output amplitude
    expected_phase: int
    phase_error: float      # rad, in [0, pi]
    norm: float

    def as_dict(self) -> dict:
        return asdict(self)


def gate_kind_for(config: ModelConfig) -> GateKind:
    return "c2not2" if config.k == 2 else "cnotn"


def truth_table_check(
    gate: GateKind,
    config: ModelConfig,
    opts: IntegratorOptions | None = None,
    schedule: Schedule | None = None,
) -> list[TruthTableRow]:
    """
    Evolve every computational input row at once (one batched propagation)
    and report the population and phase on the expected output.
    """
    _check_gate(gate, config.k, config.N)
    opts = (opts or IntegratorOptions()).model_copy(update={"record_stride": 10**12})

    H = assemble(config, schedule)
    labels = computational_labels(config.k, config.N)
    block = np.stack([basis_vector(label) for label in labels], axis=1)
    final = evolve(H, block, opts=opts).final_state

    rows = []
    for column, label in enumerate(labels):
        expected, phase = ideal_output(gate, label)
        amplitude = final[flat_index(expected, config.k, config.N), column]
        error = abs(float(np.angle(amplitude * phase))) if abs(amplitude) > 0 else math.pi
        rows.append(TruthTableRow(
            input=str(label),
            expected=str(expected),
            population=float(abs(amplitude) ** 2),
            phase=float(np.angle(amplitude)),
            expected_phase=phase,
            phase_error=error,
            norm=float(np.sum(np.abs(final[:, column]) ** 2)),
        ))
    return rows


# ---------------------------
# Gate runs
# ---------------------------
@dataclass(frozen=True)
class GateRun:
    fidelity: float
    leak: float
    norm: float          # final squared norm of the full state
    duration: float      # s
    projection: ComputationalProjection
    target: TargetState
    trajectory: Trajectory

    @property
    def rho(self) -> np.ndarray:
        return self.projection.density


def gate_fidelity_run(
    config: ModelConfig,
    layout: Layout | None = None,
    schedule: Schedule | None = None,
    opts: IntegratorOptions | None = None,
    target: TargetKind = "ghz",
    controls: tuple[str, ...] | None = None,
) -> GateRun:
    """
    Evolve the superposition input through the schedule, project onto the
    computational subspace and compare with the target state.
    """
    if layout is not None and (layout.k, layout.N) != (config.k, config.N):
        raise ValueError(f"layout has k={layout.k}, N={layout.N}, model k={config.k}, N={config.N}")

    k, N = config.k, config.N
    H = assemble(config, schedule)
    trajectory = evolve(H, initial_state(k, N, controls), opts=opts)
    projection = project_computational(trajectory.final_state, k, N)

    if target == "ghz":
        target_state = ghz_target(k, N)
    elif target == "product":
        target_state = product_target(k, N)
    elif target == "ideal":
        target_state = ideal_target(gate_kind_for(config), k, N, controls)
    else:
        raise ValueError(f"unknown target '{target}'")

    return GateRun(
        fidelity=fidelity(projection.density, target_state.density),
        leak=projection.leak,
        norm=projection.norm,
        duration=H.schedule.duration,
        projection=projection,
        target=target_state,
        trajectory=trajectory,
    )

"""
Hamiltonian builder
-------------------

Full non-Hermitian RWA Hamiltonian (hbar = 1) of k control atoms and
N target atoms driven by a Schedule:

    H = sum_i H_C(Omega_r)_i + sum_j H_T(Omega_p(t), Omega_c, Delta)_j
        + sum V_CT |r><r| x |R><R| + sum V_TT |R><R| x |R><R|
        + sum V_CC |r><r| x |r><r|

Decay enters as -i gamma/2 on |r> (controls), |P> (targets) and
optionally |R> (targets). Every interaction and decay term is diagonal in
the product basis, so each segment is stored as:
- one static diagonal vector (detuning, decay, interactions)
- a few single-site off-diagonal blocks, one per driven atom
- for the Raman window, a unit-amplitude drive block scaled by Omega_p(t)

With a shift cutoff, basis states whose static shift exceeds it are held
empty (the infinite-shift limit): couplings into them are dropped.
"""

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from rydgate.hilbert import (
    CONTROL_LEVELS,
    DENSE_LIMIT,
    TARGET_LEVELS,
    KronOperator,
    KronTerm,
    apply_local,
    digit_table,
    hilbert_dim,
    local_dims,
)
from rydgate.interactions import InteractionTable, Layout
from rydgate.pulses import DEFAULT_T_PI, RamanPulse, Schedule, Segment, build_schedule
from rydgate.species import decay_rates

R_CONTROL = CONTROL_LEVELS.index("r")
P_TARGET = TARGET_LEVELS.index("P")
R_TARGET = TARGET_LEVELS.index("R")


# ---------------------------
# Site Hamiltonians
# ---------------------------
def control_hamiltonian(omega_r: float, gamma_r: float = 0.0) -> np.ndarray:
    """3x3 in (0, 1, r): Omega_r/2 on 1 <-> r, -i gamma_r/2 on r."""
    if omega_r < 0:
        raise ValueError(f"Omega_r must be >= 0, got {omega_r}")
    h = np.zeros((3, 3), dtype=complex)
    h[1, 2] = h[2, 1] = omega_r / 2
    h[2, 2] = -0.5j * gamma_r
    return h


def target_hamiltonian(
    omega_p: float,
    omega_c: float,
    delta: float,
    gamma_p: float = 0.0,
    gamma_R: float = 0.0,
) -> np.ndarray:
    """
    4x4 in (A, B, P, R):
    - Omega_p/2 on A <-> P and B <-> P
    - Omega_c/2 on P <-> R
    - -Delta - i gamma_p/2 on P, -i gamma_R/2 on R
    """
    if omega_p < 0 or omega_c < 0:
        raise ValueError("Omega_p and Omega_c must be >= 0")
    h = np.zeros((4, 4), dtype=complex)
    h[0, 2] = h[2, 0] = omega_p / 2
    h[1, 2] = h[2, 1] = omega_p / 2
    h[2, 3] = h[3, 2] = omega_c / 2
    h[2, 2] = -delta - 0.5j * gamma_p
    h[3, 3] = -0.5j * gamma_R
    return h


# ---------------------------
# Model configuration
# ---------------------------
@dataclass(frozen=True)
class ModelConfig:
    """
    Everything the builder needs besides the schedule.
    Rates in s^-1, frequencies in rad/s, t_pi in s.
    """
    k: int
    N: int
    omega_p_max: float
    delta: float
    omega_c: float
    interactions: InteractionTable
    t_pi: float = DEFAULT_T_PI
    gamma_r: tuple[float, ...] = ()
    gamma_p: tuple[float, ...] = ()
    gamma_R: tuple[float, ...] = ()
    species: tuple[str, ...] = ()
    shift_cutoff: float | None = None

    def __post_init__(self):
        hilbert_dim(self.k, self.N)
        if min(self.omega_p_max, self.omega_c, self.t_pi) < 0:
            raise ValueError("frequencies and t_pi must be >= 0")
        if self.shift_cutoff is not None and self.shift_cutoff <= self.field_scale:
            raise ValueError(
                f"shift_cutoff = {self.shift_cutoff:.3e} rad/s must exceed the field scale "
                f"{self.field_scale:.3e} rad/s"
            )
        if (self.interactions.k, self.interactions.N) != (self.k, self.N):
            raise ValueError(
                f"interaction table is for k={self.interactions.k}, N={self.interactions.N}, "
                f"model has k={self.k}, N={self.N}"
            )
        for name, size in (("gamma_r", self.k), ("gamma_p", self.N), ("gamma_R", self.N)):
            value = getattr(self, name)
            if not value:
                object.__setattr__(self, name, (0.0,) * size)
            elif len(value) != size:
                raise ValueError(f"{name} needs {size} entries, got {len(value)}")
            elif min(value) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def omega_r(self) -> float:
        return math.pi / self.t_pi

    @property
    def dim(self) -> int:
        return hilbert_dim(self.k, self.N)

    @property
    def field_scale(self) -> float:
        """Largest detuning or Rabi frequency of the drive fields."""
        rabi = self.omega_r if self.t_pi > 0 else 0.0
        return max(abs(self.delta), self.omega_p_max, self.omega_c, rabi)

    @property
    def has_decay(self) -> bool:
        return any(self.gamma_r) or any(self.gamma_p) or any(self.gamma_R)

    def schedule(self) -> Schedule:
        return build_schedule(self.k, self.N, self.omega_p_max, self.delta, self.omega_c, self.t_pi)

    def without_decay(self) -> "ModelConfig":
        return ModelConfig(
            k=self.k, N=self.N,
            omega_p_max=self.omega_p_max, delta=self.delta, omega_c=self.omega_c,
            interactions=self.interactions, t_pi=self.t_pi, species=self.species,
            shift_cutoff=self.shift_cutoff,
        )

    @classmethod
    def from_layout(
        cls,
        layout: Layout,
        interactions: InteractionTable,
        omega_p_max: float,
        delta: float,
        omega_c: float,
        t_pi: float = DEFAULT_T_PI,
        decay: bool = True,
        target_rydberg_decay: bool = False,
        shift_cutoff: float | None = None,
    ) -> "ModelConfig":
        """Decay rates come from each atom's species."""
        gamma_r = tuple(decay_rates(a.species)[0] if decay else 0.0 for a in layout.controls)
        gamma_p = tuple(decay_rates(a.species)[1] if decay else 0.0 for a in layout.targets)
        gamma_R = tuple(
            decay_rates(a.species)[0] if decay and target_rydberg_decay else 0.0
            for a in layout.targets
        )
        return cls(
            k=layout.k, N=layout.N,
            omega_p_max=omega_p_max, delta=delta, omega_c=omega_c,
            interactions=interactions, t_pi=t_pi,
            gamma_r=gamma_r, gamma_p=gamma_p, gamma_R=gamma_R,
            species=tuple(a.species.name for a in layout.atoms),
            shift_cutoff=shift_cutoff,
        )


# ---------------------------
# Segment-local Hamiltonians
# ---------------------------
@dataclass(frozen=True)
class SegmentHamiltonian:
    """
    H(t) = diag + sum_axis (static_axis + f(t) drive_axis) on one site each,
    with f(t) = Omega_p(t - t_start) in the Raman window and 0 elsewhere.
    `keep` (optional) masks the states that may carry amplitude; H acts as
    keep H keep.
    """
    k: int
    N: int
    segment: Segment
    diag: np.ndarray = field(repr=False)
    blocks: tuple[tuple[int, np.ndarray, np.ndarray | None], ...] = ()
    raman: RamanPulse | None = None
    keep: np.ndarray | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return local_dims(self.k, self.N)

    @property
    def is_constant(self) -> bool:
        return self.raman is None

    @property
    def max_shift(self) -> float:
        """Largest |diag| over the states that may carry amplitude (rad/s)."""
        diag = self.diag if self.keep is None else self.diag[self.keep]
        return float(np.max(np.abs(diag))) if diag.size else 0.0

    def envelope(self, t: float) -> float:
        if self.raman is None:
            return 0.0
        return float(self.raman.envelope(t - self.segment.t_start))

    def local_matrices(self, t: float) -> list[tuple[int, np.ndarray]]:
        f = self.envelope(t)
        out = []
        for axis, static, drive in self.blocks:
            out.append((axis, static if drive is None else static + f * drive))
        return out

    def _masked(self, psi: np.ndarray) -> np.ndarray:
        if self.keep is None:
            return psi
        return psi * self.keep.reshape((-1,) + (1,) * (psi.ndim - 1))

    def apply_offdiagonal(self, t: float, psi: np.ndarray) -> np.ndarray:
        dims = self.dims
        psi = self._masked(psi)
        out = np.zeros_like(psi)
        for axis, matrix in self.local_matrices(t):
            out += apply_local(matrix, axis, dims, psi)
        return self._masked(out)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        diag = self.diag.reshape((-1,) + (1,) * (psi.ndim - 1))
        return diag * self._masked(psi) + self.apply_offdiagonal(t, psi)

    def operator(self, t: float) -> KronOperator:
        """Unmasked Kronecker form; use sparse()/dense() for keep H keep."""
        terms = tuple(KronTerm(1.0, ((axis, matrix),)) for axis, matrix in self.local_matrices(t))
        return KronOperator(self.k, self.N, terms, self.diag)

    def _project(self, matrix):
        if self.keep is None:
            return matrix
        P = sp.diags(self.keep.astype(complex))
        return (P @ matrix @ P).tocsr()

    def sparse(self, t: float) -> sp.csr_matrix:
        return self._project(self.operator(t).to_sparse())

    def dense(self, t: float, max_dim: int = DENSE_LIMIT) -> np.ndarray:
        dense = self.operator(t).to_dense(max_dim)
        if self.keep is None:
            return dense
        return dense * np.outer(self.keep, self.keep)

    def sparse_parts(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """(static, drive) with H(t) = static + f(t) drive, both projected."""
        static_terms = tuple(KronTerm(1.0, ((axis, s),)) for axis, s, _ in self.blocks)
        drive_terms = tuple(KronTerm(1.0, ((axis, d),)) for axis, _, d in self.blocks if d is not None)
        static = KronOperator(self.k, self.N, static_terms, self.diag).to_sparse()
        drive = KronOperator(self.k, self.N, drive_terms).to_sparse()
        return self._project(static), self._project(drive)


def static_diagonal(config: ModelConfig) -> np.ndarray:
    """
    Detuning, decay and every Rydberg-Rydberg projector term, as one
    vector over the product basis.
    """
    k, N = config.k, config.N
    digits = digit_table(k, N)
    diag = np.zeros(digits.shape[0], dtype=complex)

    in_r = [digits[:, i] == R_CONTROL for i in range(k)]
    in_R = [digits[:, k + j] == R_TARGET for j in range(N)]
    in_P = [digits[:, k + j] == P_TARGET for j in range(N)]

    for i in range(k):
        diag[in_r[i]] += -0.5j * config.gamma_r[i]
    for j in range(N):
        diag[in_P[j]] += -config.delta - 0.5j * config.gamma_p[j]
        diag[in_R[j]] += -0.5j * config.gamma_R[j]

    table = config.interactions
    for i in range(k):
        for j in range(N):
            if table.control_target[i, j]:
                diag[in_r[i] & in_R[j]] += table.control_target[i, j]
    for a in range(N):
        for b in range(a + 1, N):
            if table.target_target[a, b]:
                diag[in_R[a] & in_R[b]] += table.target_target[a, b]
    for a in range(k):
        for b in range(a + 1, k):
            if table.control_control[a, b]:
                diag[in_r[a] & in_r[b]] += table.control_control[a, b]

    diag.setflags(write=False)
    return diag


def _offdiagonal(matrix: np.ndarray) -> np.ndarray:
    return matrix - np.diag(np.diag(matrix))


BLOCKADE_SEPARATION = 100.0


def blockade_cutoff(shift: float, field_scale: float) -> float | None:
    """
    Cutoff between a blockade shift and the drive fields (geometric mean),
    or None when the shift is within BLOCKADE_SEPARATION of the fields.
    """
    if shift <= BLOCKADE_SEPARATION * field_scale:
        return None
    return math.sqrt(shift * field_scale)


def held_empty_mask(config: ModelConfig, diag: np.ndarray) -> np.ndarray | None:
    """States allowed to carry amplitude under the shift cutoff (None: all)."""
    if config.shift_cutoff is None:
        return None
    keep = np.abs(diag.real) <= config.shift_cutoff
    if keep.all():
        return None
    keep.setflags(write=False)
    return keep


def segment_hamiltonian(
    config: ModelConfig,
    segment: Segment,
    diag: np.ndarray,
    keep: np.ndarray | None = None,
) -> SegmentHamiltonian:
    k, N = config.k, config.N
    blocks = []
    raman = None

    if segment.kind == "pi":
        blocks.append((segment.control, _offdiagonal(control_hamiltonian(segment.omega_r)), None))
    elif segment.kind == "raman":
        raman = segment.raman
        coupling = _offdiagonal(target_hamiltonian(0.0, segment.omega_c, 0.0))
        drive = _offdiagonal(target_hamiltonian(1.0, 0.0, 0.0))
        for j in range(N):
            blocks.append((k + j, coupling, drive))

    return SegmentHamiltonian(k, N, segment, diag, tuple(blocks), raman, keep)


# ---------------------------
# Time-dependent Hamiltonian
# ---------------------------
@dataclass(frozen=True)
class TimeDependentHamiltonian:
    config: ModelConfig
    schedule: Schedule
    segments: tuple[SegmentHamiltonian, ...]

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def decay_diagonal(self) -> np.ndarray:
        """Anti-Hermitian part as a real vector (-gamma/2 entries, all <= 0)."""
        return self.segments[0].diag.imag.copy()

    def segment_index(self, t: float) -> int:
        starts = [s.segment.t_start for s in self.segments]
        index = bisect.bisect_right(starts, t) - 1
        if index < 0 or t > self.schedule.t_end:
            raise ValueError(f"t = {t:.6e} s outside the schedule [0, {self.schedule.t_end:.6e}]")
        return index

    def segment_at(self, t: float) -> SegmentHamiltonian:
        return self.segments[self.segment_index(t)]

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        return self.segment_at(t).apply(t, psi)

    def operator(self, t: float) -> KronOperator:
        return self.segment_at(t).operator(t)

    def dense(self, t: float, max_dim: int = DENSE_LIMIT) -> np.ndarray:
        return self.segment_at(t).dense(t, max_dim)

    def sparse(self, t: float) -> sp.csr_matrix:
        return self.segment_at(t).sparse(t)

    @property
    def keep(self) -> np.ndarray | None:
        return self.segments[0].keep


def assemble(config: ModelConfig, schedule: Schedule | None = None) -> TimeDependentHamiltonian:
    schedule = schedule if schedule is not None else config.schedule()
    if (schedule.k, schedule.N) != (config.k, config.N):
        raise ValueError(
            f"schedule is for k={schedule.k}, N={schedule.N}, model has k={config.k}, N={config.N}"
        )
    diag = static_diagonal(config)
    keep = held_empty_mask(config, diag)
    segments = tuple(segment_hamiltonian(config, seg, diag, keep) for seg in schedule.segments)
    return TimeDependentHamiltonian(config, schedule, segments)


def assemble_cnotn(config: ModelConfig, schedule: Schedule | None = None) -> TimeDependentHamiltonian:
    if config.k != 1:
        raise ValueError(f"CNOT^N has one control atom, got k={config.k}")
    return assemble(config, schedule)


def assemble_c2not2(config: ModelConfig, schedule: Schedule | None = None) -> TimeDependentHamiltonian:
    if (config.k, config.N) != (2, 2):
        raise ValueError(f"C2NOT2 needs k=2, N=2, got k={config.k}, N={config.N}")
    return assemble(config, schedule)

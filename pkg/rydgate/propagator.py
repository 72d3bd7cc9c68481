"""
Propagation of i d(psi)/dt = H(t) psi over a Schedule.

Methods:
- rk4-fixed:    classic RK4 with fixed steps per segment
- expm-segment: exact exponential (scipy expm_multiply) on constant
                segments, RK4 in the Raman window
- rk4-lawson:   integrating-factor RK4; the diagonal part (detuning,
                decay, interactions) is propagated exactly. The off-diagonal
                couplings still oscillate at the gaps they bridge, so a
                shift that is coupled to the drive still limits the step.

A Raman step with max|diag| h above `stiff_limit` is taken as one
exponential midpoint step, exp(-i h H(t + h/2)), whatever the method.
States held empty by the model's shift cutoff never enter max|diag|.

psi0 may be a single state (dim,) or a block of columns (dim, m).
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.sparse.linalg import expm_multiply

from rydgate.errors import IntegratorFailure
from rydgate.hamiltonian import SegmentHamiltonian, TimeDependentHamiltonian
from rydgate.hilbert import CONTROL_LEVELS, TARGET_LEVELS, BasisLabel, digit_table
from rydgate.pulses import Schedule

NORM_TOLERANCE = 1e-9
FINITE_CHECK_EVERY = 64


class IntegratorOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["rk4-fixed", "expm-segment", "rk4-lawson"] = "rk4-fixed"
    step_pi: float = 0.5e-12        # s, RK4 step during pi-pulses and idle segments
    step_raman: float = 5e-12       # s, RK4 step in the Raman window
    raman_substeps: int | None = None
    record_stride: int = 1000
    stiff_limit: float = 1.0        # max|diag| h beyond which Raman steps use the midpoint exponential

    @field_validator("step_pi", "step_raman", "stiff_limit")
    @classmethod
    def _positive_step(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"step must be > 0, got {value}")
        return value

    @field_validator("raman_substeps", "record_stride")
    @classmethod
    def _positive_count(cls, value: int | None) -> int | None:
        if value is not None and value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value

    def check_schedule(self, schedule: Schedule) -> None:
        for seg in schedule.segments:
            if seg.kind == "pi" and self.step_pi > seg.duration / 20:
                raise ValueError(
                    f"step_pi = {self.step_pi:.3e} s exceeds t_pi/20 = {seg.duration / 20:.3e} s"
                )

    def halved(self) -> "IntegratorOptions":
        substeps = None if self.raman_substeps is None else 2 * self.raman_substeps
        return self.model_copy(update={
            "step_pi": self.step_pi / 2,
            "step_raman": self.step_raman / 2,
            "raman_substeps": substeps,
            "record_stride": 2 * self.record_stride,
        })

    def steps_for(self, seg: SegmentHamiltonian) -> int:
        duration = seg.segment.duration
        if seg.segment.kind == "raman":
            if self.raman_substeps is not None:
                return self.raman_substeps
            return max(1, math.ceil(duration / self.step_raman - 1e-9))
        return max(1, math.ceil(duration / self.step_pi - 1e-9))


@dataclass(frozen=True)
class Trajectory:
    """
    Recorded snapshots. states has shape (n, dim) or (n, dim, m);
    norms holds squared norms, shape (n,) or (n, m).
    """
    k: int
    N: int
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_norm(self):
        return self.norms[-1]

    @property
    def batched(self) -> bool:
        return self.states.ndim == 3


# ---------------------------
# Single steps
# ---------------------------
def rk4_step(seg: SegmentHamiltonian, t: float, h: float, psi: np.ndarray) -> np.ndarray:
    half = h / 2
    k1 = -1j * seg.apply(t, psi)
    k2 = -1j * seg.apply(t + half, psi + half * k1)
    k3 = -1j * seg.apply(t + half, psi + half * k2)
    k4 = -1j * seg.apply(t + h, psi + h * k3)
    return psi + (k1 + 2 * k2 + 2 * k3 + k4) * (h / 6)


def lawson_step(
    seg: SegmentHamiltonian,
    t: float,
    h: float,
    psi: np.ndarray,
    e_half: np.ndarray,
    e_full: np.ndarray,
) -> np.ndarray:
    """RK4 in the interaction picture of the diagonal; e_* = exp(-i diag h/2), exp(-i diag h)."""
    half = h / 2

    def rhs(time, state):
        return -1j * seg.apply_offdiagonal(time, state)

    k1 = rhs(t, psi)
    k2 = rhs(t + half, e_half * (psi + half * k1))
    k3 = rhs(t + half, e_half * psi + half * k2)
    k4 = rhs(t + h, e_full * psi + h * (e_half * k3))
    return e_full * psi + (h / 6) * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)


def midpoint_step(
    seg: SegmentHamiltonian,
    t: float,
    h: float,
    psi: np.ndarray,
    parts: tuple,
) -> np.ndarray:
    """exp(-i h H(t + h/2)) psi; parts = seg.sparse_parts()."""
    static, drive = parts
    operator = static + seg.envelope(t + h / 2) * drive
    return expm_multiply(-1j * h * operator, psi)


def _column_norms(psi: np.ndarray):
    norms = np.sum(np.abs(psi) ** 2, axis=0)
    return float(norms) if psi.ndim == 1 else norms


def _check_finite(psi: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(psi)):
        raise IntegratorFailure("non-finite amplitudes during propagation", t)


# ---------------------------
# Propagation
# ---------------------------
def evolve(
    H: TimeDependentHamiltonian,
    psi0: np.ndarray,
    schedule: Schedule | None = None,
    opts: IntegratorOptions | None = None,
) -> Trajectory:
    """
    Propagate psi0 through every segment of the schedule. Snapshots are
    taken at t = 0, every `record_stride` steps, and at each segment end.
    """
    opts = opts or IntegratorOptions()
    if schedule is not None and schedule != H.schedule:
        raise ValueError("schedule does not match the one the Hamiltonian was assembled for")
    opts.check_schedule(H.schedule)

    psi = np.array(psi0, dtype=complex)
    if psi.ndim not in (1, 2) or psi.shape[0] != H.dim:
        raise ValueError(f"initial state has shape {psi.shape}, expected ({H.dim},) or ({H.dim}, m)")
    norms0 = np.atleast_1d(_column_norms(psi))
    if np.any(np.abs(norms0 - 1.0) > NORM_TOLERANCE):
        raise ValueError(f"initial state is not normalized (squared norms {norms0})")
    if H.keep is not None and np.any(np.abs(psi[~H.keep]) > NORM_TOLERANCE):
        raise ValueError("initial state has amplitude on states held empty by the shift cutoff")

    times = [0.0]
    states = [psi.copy()]
    counter = 0

    for seg in H.segments:
        t0, t1 = seg.segment.t_start, seg.segment.t_end

        if opts.method == "expm-segment" and seg.is_constant:
            psi = expm_multiply(-1j * (t1 - t0) * seg.sparse(t0), psi)
            _check_finite(psi, t1)
            times.append(t1)
            states.append(psi.copy())
            continue

        n = opts.steps_for(seg)
        h = (t1 - t0) / n
        stiff = not seg.is_constant and seg.max_shift * h > opts.stiff_limit
        if stiff:
            parts = seg.sparse_parts()
        elif opts.method == "rk4-lawson":
            diag = seg.diag.reshape((-1,) + (1,) * (psi.ndim - 1))
            e_half = np.exp(-0.5j * h * diag)
            e_full = e_half * e_half

        for s in range(n):
            t = t0 + s * h
            if stiff:
                psi = midpoint_step(seg, t, h, psi, parts)
            elif opts.method == "rk4-lawson":
                psi = lawson_step(seg, t, h, psi, e_half, e_full)
            else:
                psi = rk4_step(seg, t, h, psi)
            counter += 1

            if s % FINITE_CHECK_EVERY == 0:
                _check_finite(psi, t + h)
            if counter % opts.record_stride == 0 and s != n - 1:
                times.append(t + h)
                states.append(psi.copy())

        _check_finite(psi, t1)
        times.append(t1)
        states.append(psi.copy())

    states_arr = np.array(states)
    norms = np.sum(np.abs(states_arr) ** 2, axis=1)
    return Trajectory(H.k, H.N, np.array(times), states_arr, norms)


def evolve_converged(
    H: TimeDependentHamiltonian,
    psi0: np.ndarray,
    opts: IntegratorOptions | None = None,
    tol: float = 1e-7,
    max_halvings: int = 4,
) -> tuple[Trajectory, IntegratorOptions, float]:
    """
    Halve the steps until the final state moves by less than `tol`
    (2-norm). Returns the finer trajectory, its options and the last change.
    """
    opts = opts or IntegratorOptions()
    previous = evolve(H, psi0, opts=opts)
    change = math.inf
    for _ in range(max_halvings):
        opts = opts.halved()
        current = evolve(H, psi0, opts=opts)
        change = float(np.linalg.norm(current.final_state - previous.final_state))
        previous = current
        if change < tol:
            break
    return previous, opts, change


# ---------------------------
# Observables
# ---------------------------
def pattern_mask(pattern: str | BasisLabel, k: int, N: int) -> np.ndarray:
    """
    Boolean mask over the product basis. Patterns use the label text form
    with '*' matching any level, e.g. "0|A*" or "*|RR".
    """
    text = str(pattern)
    if "|" not in text:
        raise ValueError(f"pattern '{text}' must look like '0|A*'")
    controls, targets = text.split("|", 1)
    if len(controls) != k or len(targets) != N:
        raise ValueError(f"pattern '{text}' does not fit k={k}, N={N}")

    digits = digit_table(k, N)
    mask = np.ones(digits.shape[0], dtype=bool)
    for position, (char, levels) in enumerate(
        [(c, CONTROL_LEVELS) for c in controls] + [(c, TARGET_LEVELS) for c in targets]
    ):
        if char == "*":
            continue
        if char not in levels:
            raise ValueError(f"unknown level '{char}' in pattern '{text}'")
        mask &= digits[:, position] == levels.index(char)
    return mask


def populations(traj: Trajectory, labels: list[str | BasisLabel]) -> dict[str, np.ndarray]:
    """|amplitude|^2 time series per label or pattern (summed over matches)."""
    if traj.batched:
        raise ValueError("populations() expects a single-state trajectory")
    probs = np.abs(traj.states) ** 2
    return {str(label): probs[:, pattern_mask(label, traj.k, traj.N)].sum(axis=1) for label in labels}


def leaked_norm(traj: Trajectory) -> np.ndarray:
    """1 - ||psi(t)||^2."""
    return 1.0 - traj.norms

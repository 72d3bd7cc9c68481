"""
Pulse envelopes and gate schedules.

A gate is a chain of contiguous segments:
- "pi":    square pi-pulse Omega_r on one control atom (targets dark)
- "raman": smooth Raman pulse Omega_p(t) plus constant Omega_c on all targets
- "idle":  no fields (interactions and decay still act)
"""

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.integrate import quad

from rydgate.units import NS, US, to_mhz_2pi

DEFAULT_T_PI = 10 * NS


class RamanPulse(BaseModel):
    """
    sin^2 envelope whose duration is fixed by the pulse area
    int_0^T Omega_p(t)^2 dt = 2 pi Delta, i.e. T = 16 pi Delta / (3 Omega_p_max^2).
    """
    model_config = ConfigDict(frozen=True)

    omega_p_max: float   # rad/s
    delta: float         # rad/s

    @model_validator(mode="after")
    def _positive(self) -> "RamanPulse":
        if not (self.omega_p_max > 0 and self.delta > 0):
            raise ValueError(
                f"Raman pulse needs Omega_p_max > 0 and Delta > 0, got {self.omega_p_max}, {self.delta}"
            )
        return self

    @property
    def duration(self) -> float:
        return 16 * math.pi * self.delta / (3 * self.omega_p_max**2)

    def envelope(self, t):
        """Unchecked Omega_p(t); t measured from the start of the pulse."""
        return self.omega_p_max * np.sin(np.pi * t / self.duration) ** 2


class PiPulse(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_r: float       # rad/s
    duration: float      # s
    control: int = 0

    @model_validator(mode="after")
    def _area(self) -> "PiPulse":
        if not (self.omega_r > 0 and self.duration > 0):
            raise ValueError("pi-pulse needs Omega_r > 0 and a positive duration")
        if not math.isclose(self.omega_r * self.duration, math.pi, rel_tol=1e-9):
            raise ValueError(f"pulse area Omega_r * t_pi = {self.omega_r * self.duration} is not pi")
        return self

    @classmethod
    def from_duration(cls, t_pi: float, control: int = 0) -> "PiPulse":
        if not t_pi > 0:
            raise ValueError(f"t_pi must be > 0, got {t_pi}")
        return cls(omega_r=math.pi / t_pi, duration=t_pi, control=control)


def raman_envelope(pulse: RamanPulse, t):
    """Omega_p(t) = Omega_p_max sin^2(pi t / T) for 0 <= t <= T."""
    T = pulse.duration
    times = np.asarray(t, dtype=float)
    if np.any(times < 0) or np.any(times > T):
        raise ValueError(f"t outside the Raman window [0, {T:.6e}] s")
    return pulse.envelope(times) if times.ndim else float(pulse.envelope(float(times)))


def raman_area(pulse: RamanPulse) -> float:
    """int_0^T Omega_p(t)^2 dt by adaptive quadrature (should equal 2 pi Delta)."""
    value, _ = quad(lambda t: pulse.envelope(t) ** 2, 0.0, pulse.duration, epsabs=0.0, epsrel=1e-12, limit=200)
    return value


# ---------------------------
# Segments and schedules
# ---------------------------
class Segment(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["pi", "raman", "idle"]
    t_start: float
    t_end: float
    control: int | None = None
    omega_r: float = 0.0
    raman: RamanPulse | None = None
    omega_c: float = 0.0

    @model_validator(mode="after")
    def _fields(self) -> "Segment":
        if not self.t_end > self.t_start:
            raise ValueError(f"segment ends ({self.t_end}) before it starts ({self.t_start})")
        if self.kind == "pi" and (self.control is None or self.omega_r <= 0):
            raise ValueError("pi segment needs a control index and Omega_r > 0")
        if self.kind == "raman" and self.raman is None:
            raise ValueError("raman segment needs a RamanPulse")
        if self.kind != "raman" and self.omega_c != 0.0:
            raise ValueError("Omega_c is only on during the Raman window")
        if self.omega_c < 0 or self.omega_r < 0:
            raise ValueError("field amplitudes must be >= 0")
        return self

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


class Schedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    N: int
    segments: tuple[Segment, ...]

    @model_validator(mode="after")
    def _contiguous(self) -> "Schedule":
        if not self.segments:
            raise ValueError("schedule has no segments")
        if self.segments[0].t_start != 0.0:
            raise ValueError("schedule must start at t = 0")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if not math.isclose(prev.t_end, nxt.t_start, rel_tol=1e-12, abs_tol=1e-18):
                raise ValueError(f"segments not contiguous at t = {prev.t_end:.6e} s")
        for seg in self.segments:
            if seg.control is not None and not 0 <= seg.control < self.k:
                raise ValueError(f"segment drives control {seg.control}, layout has k={self.k}")
        return self

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    @property
    def raman_segment(self) -> Segment | None:
        return next((s for s in self.segments if s.kind == "raman"), None)

    def is_time_symmetric(self, rel_tol: float = 1e-12) -> bool:
        """Durations and driven controls mirror about the middle segment."""
        segs = self.segments
        for a, b in zip(segs, reversed(segs)):
            if a.kind != b.kind or a.control != b.control:
                return False
            if not math.isclose(a.duration, b.duration, rel_tol=rel_tol):
                return False
        return True


def _chain(k: int, N: int, parts: list[dict]) -> Schedule:
    t = 0.0
    segments = []
    for part in parts:
        duration = part.pop("duration")
        segments.append(Segment(t_start=t, t_end=t + duration, **part))
        t = t + duration
    return Schedule(k=k, N=N, segments=tuple(segments))


def build_schedule(
    k: int,
    N: int,
    omega_p_max: float,
    delta: float,
    omega_c: float,
    t_pi: float = DEFAULT_T_PI,
) -> Schedule:
    """
    Excite controls 0..k-1 in sequence, run the Raman window on all targets,
    de-excite the controls in reverse order.
    """
    if k < 1 or N < 1:
        raise ValueError(f"need k >= 1 and N >= 1, got k={k}, N={N}")
    if omega_c < 0:
        raise ValueError(f"Omega_c must be >= 0, got {omega_c}")

    pi = PiPulse.from_duration(t_pi)
    raman = RamanPulse(omega_p_max=omega_p_max, delta=delta)

    excite = [dict(kind="pi", control=i, omega_r=pi.omega_r, duration=t_pi) for i in range(k)]
    window = [dict(kind="raman", raman=raman, omega_c=omega_c, duration=raman.duration)]
    deexcite = [dict(kind="pi", control=i, omega_r=pi.omega_r, duration=t_pi) for i in reversed(range(k))]
    return _chain(k, N, excite + window + deexcite)


def build_cnot_schedule(
    N: int,
    omega_p_max: float,
    delta: float,
    omega_c: float,
    t_pi: float = DEFAULT_T_PI,
) -> Schedule:
    return build_schedule(1, N, omega_p_max, delta, omega_c, t_pi)


def build_c2not2_schedule(
    omega_p_max: float,
    delta: float,
    omega_c: float,
    t_pi: float = DEFAULT_T_PI,
) -> Schedule:
    return build_schedule(2, 2, omega_p_max, delta, omega_c, t_pi)


def schedule_table(schedule: Schedule) -> list[dict]:
    """Segment table, times in us and fields in 2pi x MHz."""
    rows = []
    for index, seg in enumerate(schedule.segments):
        rows.append({
            "index": index,
            "kind": seg.kind,
            "t_start_us": seg.t_start / US,
            "t_end_us": seg.t_end / US,
            "control": seg.control,
            "omega_r_MHz_2pi": to_mhz_2pi(seg.omega_r),
            "omega_p_max_MHz_2pi": to_mhz_2pi(seg.raman.omega_p_max) if seg.raman else 0.0,
            "delta_MHz_2pi": to_mhz_2pi(seg.raman.delta) if seg.raman else 0.0,
            "omega_c_MHz_2pi": to_mhz_2pi(seg.omega_c),
        })
    return rows

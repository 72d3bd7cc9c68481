import math

import numpy as np
import pytest

from rydgate.pulses import (
    PiPulse,
    RamanPulse,
    Schedule,
    Segment,
    build_c2not2_schedule,
    build_cnot_schedule,
    raman_area,
    raman_envelope,
    schedule_table,
)
from rydgate.units import MHZ_2PI, NS, US


def cnot_fields():
    return dict(omega_p_max=50 * MHZ_2PI, delta=1200 * MHZ_2PI, omega_c=150 * MHZ_2PI)


class TestRamanPulse:
    def test_duration_from_area_condition(self):
        pulse = RamanPulse(omega_p_max=50 * MHZ_2PI, delta=1200 * MHZ_2PI)
        assert pulse.duration == pytest.approx(1.28 * US, rel=1e-12)

    def test_area_equals_two_pi_delta(self):
        pulse = RamanPulse(omega_p_max=50 * MHZ_2PI, delta=1200 * MHZ_2PI)
        assert raman_area(pulse) == pytest.approx(2 * math.pi * pulse.delta, rel=1e-6)

    def test_envelope_shape(self):
        pulse = RamanPulse(omega_p_max=20 * MHZ_2PI, delta=1200 * MHZ_2PI)
        T = pulse.duration
        assert raman_envelope(pulse, 0.0) == pytest.approx(0.0, abs=1e-6)
        assert raman_envelope(pulse, T / 2) == pytest.approx(pulse.omega_p_max)
        values = raman_envelope(pulse, np.linspace(0, T, 11))
        assert np.allclose(values, values[::-1])

    def test_envelope_outside_window(self):
        pulse = RamanPulse(omega_p_max=50 * MHZ_2PI, delta=1200 * MHZ_2PI)
        with pytest.raises(ValueError):
            raman_envelope(pulse, pulse.duration * 1.01)
        with pytest.raises(ValueError):
            raman_envelope(pulse, -1e-12)

    def test_rejects_non_positive_fields(self):
        with pytest.raises(ValueError):
            RamanPulse(omega_p_max=0.0, delta=1.0)


class TestPiPulse:
    def test_area_is_pi(self):
        pulse = PiPulse.from_duration(10 * NS)
        assert pulse.omega_r * pulse.duration == pytest.approx(math.pi)

    def test_wrong_area_rejected(self):
        with pytest.raises(ValueError):
            PiPulse(omega_r=1e8, duration=10 * NS)


class TestSchedules:
    def test_cnot_duration(self):
        schedule = build_cnot_schedule(4, **cnot_fields())
        assert [s.kind for s in schedule.segments] == ["pi", "raman", "pi"]
        assert schedule.duration / US == pytest.approx(1.303, rel=5e-3)
        assert schedule.duration / US == pytest.approx(1.300, rel=1e-9)

    def test_c2not2_duration_and_order(self):
        schedule = build_c2not2_schedule(20 * MHZ_2PI, 1200 * MHZ_2PI, 60 * MHZ_2PI)
        assert [s.control for s in schedule.segments] == [0, 1, None, 1, 0]
        assert schedule.duration / US == pytest.approx(8.06, rel=5e-3)
        assert schedule.duration / US == pytest.approx(8.04, rel=1e-9)

    def test_time_symmetric(self):
        assert build_c2not2_schedule(20 * MHZ_2PI, 1200 * MHZ_2PI, 60 * MHZ_2PI).is_time_symmetric()

    def test_segments_are_contiguous(self):
        schedule = build_cnot_schedule(2, **cnot_fields())
        for a, b in zip(schedule.segments, schedule.segments[1:]):
            assert a.t_end == pytest.approx(b.t_start)
        assert schedule.t_end == pytest.approx(schedule.duration)

    def test_gap_rejected(self):
        pi = dict(kind="pi", control=0, omega_r=math.pi / (10 * NS))
        with pytest.raises(ValueError, match="contiguous"):
            Schedule(k=1, N=1, segments=(
                Segment(t_start=0.0, t_end=10 * NS, **pi),
                Segment(t_start=11 * NS, t_end=21 * NS, **pi),
            ))

    def test_coupling_only_in_raman_window(self):
        with pytest.raises(ValueError):
            Segment(kind="pi", t_start=0.0, t_end=10 * NS, control=0, omega_r=1e8, omega_c=1e8)

    def test_control_index_checked(self):
        with pytest.raises(ValueError):
            Schedule(k=1, N=1, segments=(
                Segment(kind="pi", t_start=0.0, t_end=10 * NS, control=1, omega_r=math.pi / (10 * NS)),
            ))

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValueError):
            build_cnot_schedule(1, 50 * MHZ_2PI, 1200 * MHZ_2PI, -1.0)


class TestScheduleTable:
    def test_rows_in_lab_units(self):
        rows = schedule_table(build_cnot_schedule(4, **cnot_fields()))
        assert len(rows) == 3
        assert rows[0]["omega_r_MHz_2pi"] == pytest.approx(50.0)  # pi / 10 ns
        assert rows[1]["omega_c_MHz_2pi"] == pytest.approx(150.0)
        assert rows[1]["delta_MHz_2pi"] == pytest.approx(1200.0)
        assert rows[2]["t_end_us"] == pytest.approx(1.3)

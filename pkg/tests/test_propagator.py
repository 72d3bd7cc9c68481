import math

import numpy as np
import pytest
from scipy.linalg import expm

from rydgate.errors import IntegratorFailure
from rydgate import propagator
from rydgate.fidelity import gate_fidelity_run
from rydgate.hamiltonian import ModelConfig, assemble, blockade_cutoff
from rydgate.hilbert import basis_vector
from rydgate.interactions import InteractionTable, interaction_table, standard_layout
from rydgate.propagator import (
    IntegratorOptions,
    evolve,
    evolve_converged,
    leaked_norm,
    pattern_mask,
    populations,
)
from rydgate.pulses import Schedule, Segment
from rydgate.units import GHZ_2PI, MHZ_2PI, NS, PS

T_PI = 10 * NS
# strong Raman field keeps the Raman window short (T = 16 pi Delta / 3 Omega_p^2 ~ 36 ns)
OMEGA_P = 300 * MHZ_2PI
DELTA = 1200 * MHZ_2PI


def model(k=1, N=1, table=None, omega_c=3 * OMEGA_P, **kwargs):
    return ModelConfig(
        k=k, N=N,
        omega_p_max=OMEGA_P, delta=DELTA, omega_c=omega_c,
        interactions=table if table is not None else InteractionTable.zeros(k, N),
        t_pi=T_PI,
        **kwargs,
    )


def pi_only(k=1, N=1):
    segment = Segment(kind="pi", t_start=0.0, t_end=T_PI, control=0, omega_r=math.pi / T_PI)
    return Schedule(k=k, N=N, segments=(segment,))


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


class TestOptions:
    def test_step_bound_against_pi_pulse(self):
        opts = IntegratorOptions(step_pi=1 * NS)
        with pytest.raises(ValueError, match="t_pi/20"):
            evolve(assemble(model()), basis_vector("0|A"), opts=opts)

    def test_halved(self):
        opts = IntegratorOptions(raman_substeps=100).halved()
        assert opts.step_pi == pytest.approx(0.25 * PS)
        assert opts.raman_substeps == 200
        assert opts.record_stride == 2000

    def test_unknown_option_rejected(self):
        with pytest.raises(ValueError):
            IntegratorOptions(tolerance=1e-9)

    def test_initial_state_checked(self):
        H = assemble(model())
        with pytest.raises(ValueError, match="normalized"):
            evolve(H, 2 * basis_vector("0|A"))
        with pytest.raises(ValueError):
            evolve(H, np.ones(5) / math.sqrt(5))


class TestPiPulse:
    def test_population_transfer(self):
        H = assemble(model(), pi_only())
        traj = evolve(H, basis_vector("1|A"))
        final = populations(traj, ["r|A", "1|A"])
        assert 1.0 - final["r|A"][-1] < 1e-9
        assert final["1|A"][-1] < 1e-9

    def test_ground_state_is_dark(self):
        H = assemble(model(), pi_only())
        traj = evolve(H, basis_vector("0|B"))
        assert populations(traj, ["0|B"])["0|B"][-1] == pytest.approx(1.0, abs=1e-12)


class TestOracle:
    def test_rk4_matches_dense_exponential_on_constant_segment(self):
        layout = standard_layout("linear", 6.0)
        config = model(N=2, table=interaction_table(layout), gamma_r=(1e3,), gamma_p=(7e6, 7e6))
        schedule = pi_only(N=2)
        H = assemble(config, schedule)
        psi0 = random_state(H.dim, 11)

        exact = expm(-1j * T_PI * H.dense(0.5 * T_PI)) @ psi0
        rk4 = evolve(H, psi0).final_state
        assert np.linalg.norm(rk4 - exact) < 1e-8

        segment = evolve(H, psi0, opts=IntegratorOptions(method="expm-segment")).final_state
        assert np.linalg.norm(segment - exact) < 1e-10

    def test_methods_agree_over_full_schedule(self):
        layout = standard_layout("single", 8.0)
        H = assemble(model(table=interaction_table(layout)))
        psi0 = (basis_vector("0|A") + basis_vector("1|A")) / math.sqrt(2)
        fixed = evolve(H, psi0, opts=IntegratorOptions(step_raman=1 * PS)).final_state
        lawson = evolve(H, psi0, opts=IntegratorOptions(method="rk4-lawson", step_raman=1 * PS)).final_state
        assert np.linalg.norm(fixed - lawson) < 1e-6


class TestNorm:
    def test_conserved_without_decay(self):
        layout = standard_layout("single", 8.0)
        H = assemble(model(table=interaction_table(layout)))
        psi0 = (basis_vector("0|A") + basis_vector("1|A")) / math.sqrt(2)
        traj = evolve(H, psi0, opts=IntegratorOptions(step_raman=1 * PS))
        assert np.max(np.abs(traj.norms - 1.0)) < 1e-9
        assert np.max(np.abs(leaked_norm(traj))) < 1e-9

    def test_non_increasing_with_decay(self):
        layout = standard_layout("single", 8.0)
        config = ModelConfig.from_layout(layout, interaction_table(layout), OMEGA_P, DELTA, 3 * OMEGA_P, T_PI)
        H = assemble(config)
        psi0 = (basis_vector("0|A") + basis_vector("1|A")) / math.sqrt(2)
        traj = evolve(H, psi0, opts=IntegratorOptions(record_stride=100))
        assert len(traj.times) > 10
        assert np.all(np.diff(traj.norms) <= 1e-12)
        assert traj.final_norm < 1.0


class TestBatched:
    def test_columns_evolve_independently(self):
        H = assemble(model(), pi_only())
        a, b = random_state(12, 1), random_state(12, 2)
        block = evolve(H, np.stack([a, b], axis=1)).final_state
        assert block.shape == (12, 2)
        assert np.allclose(block[:, 0], evolve(H, a).final_state, atol=1e-13)
        assert np.allclose(block[:, 1], evolve(H, b).final_state, atol=1e-13)


class TestFailures:
    def test_non_finite_amplitudes_raise(self):
        table = InteractionTable.blockade_limit(1, 1, 1e16)
        H = assemble(model(table=table), pi_only())
        with pytest.raises(IntegratorFailure) as info:
            evolve(H, basis_vector("r|R"))
        assert 0 < info.value.time <= T_PI


class TestConvergence:
    def test_step_halving(self):
        H = assemble(model(), pi_only())
        traj, opts, change = evolve_converged(H, basis_vector("1|B"), tol=1e-7)
        assert change < 1e-7
        assert opts.step_pi < IntegratorOptions().step_pi
        assert populations(traj, ["r|B"])["r|B"][-1] == pytest.approx(1.0, abs=1e-9)


class TestObservables:
    def test_pattern_mask(self):
        assert pattern_mask("0|*", 1, 1).sum() == 4
        assert pattern_mask("*|R*", 1, 2).sum() == 12
        with pytest.raises(ValueError):
            pattern_mask("0|X", 1, 1)
        with pytest.raises(ValueError):
            pattern_mask("0|AA", 1, 1)

    def test_snapshots_include_segment_ends(self):
        H = assemble(model())
        traj = evolve(H, basis_vector("0|A"), opts=IntegratorOptions(record_stride=10**9))
        ends = [0.0] + [s.t_end for s in H.schedule.segments]
        assert np.allclose(traj.times, ends)


def realistic_single(decay=False):
    """Cs control, one Rb target at 8 um, Omega_p = 2pi x 50 MHz, ratio 3."""
    layout = standard_layout("single", 8.0)
    omega_p = 50 * MHZ_2PI
    return ModelConfig.from_layout(layout, interaction_table(layout), omega_p, DELTA, 3 * omega_p, T_PI, decay=decay)


class TestDefaultStep:
    def test_norm_conserved_over_full_gate(self):
        H = assemble(realistic_single())
        psi0 = (basis_vector("0|A") + basis_vector("1|A")) / math.sqrt(2)
        traj = evolve(H, psi0)
        assert np.max(np.abs(traj.norms - 1.0)) < 1e-9

    @pytest.mark.slow
    def test_fidelity_stable_under_step_halving(self):
        config = realistic_single()
        coarse = gate_fidelity_run(config, opts=IntegratorOptions())
        fine = gate_fidelity_run(config, opts=IntegratorOptions().halved())
        assert abs(coarse.fidelity - fine.fidelity) < 1e-7


class TestShiftCutoff:
    V = 1e4 * 3 * OMEGA_P

    def cut_model(self, **kwargs):
        return model(table=InteractionTable.blockade_limit(1, 1, self.V), shift_cutoff=1e12, **kwargs)

    def test_blockade_cutoff(self):
        assert blockade_cutoff(50 * DELTA, DELTA) is None
        assert blockade_cutoff(1e4 * DELTA, DELTA) == pytest.approx(100 * DELTA)

    def test_shifted_states_held_empty(self):
        H = assemble(self.cut_model())
        empty = pattern_mask("r|R", 1, 1)
        assert np.array_equal(~H.keep, empty)
        t = H.schedule.segments[1].t_start + 1 * NS
        dense = H.dense(t)
        assert not dense[empty].any() and not dense[:, empty].any()
        assert np.allclose(H.sparse(t).toarray(), dense)

    def test_held_empty_state_rejected_as_input(self):
        with pytest.raises(ValueError, match="held empty"):
            evolve(assemble(self.cut_model()), basis_vector("r|R"))

    def test_cutoff_must_clear_the_fields(self):
        with pytest.raises(ValueError, match="field scale"):
            model(shift_cutoff=DELTA)

    def test_transfer_at_default_step(self):
        traj = evolve(assemble(self.cut_model()), basis_vector("1|A"))
        assert populations(traj, ["1|B"])["1|B"][-1] > 0.99
        assert np.all(np.isfinite(traj.final_state))


class TestStiffRaman:
    def test_midpoint_step_matches_fine_rk4(self, monkeypatch):
        H = assemble(model(table=InteractionTable.blockade_limit(1, 1, 100 * GHZ_2PI)))
        assert H.segments[1].max_shift * IntegratorOptions().step_raman > 1.0

        calls = []
        original = propagator.midpoint_step

        def counting(*args):
            calls.append(args[1])
            return original(*args)

        monkeypatch.setattr(propagator, "midpoint_step", counting)
        stiff = evolve(H, basis_vector("1|A")).final_state
        assert calls

        calls.clear()
        reference = evolve(H, basis_vector("1|A"), opts=IntegratorOptions(step_raman=0.25 * PS)).final_state
        assert not calls
        assert np.linalg.norm(stiff - reference) < 1e-3
        assert abs(stiff[pattern_mask("1|B", 1, 1)][0]) ** 2 > 0.9

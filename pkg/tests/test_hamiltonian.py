import numpy as np
import pytest

from rydgate.hamiltonian import (
    ModelConfig,
    assemble,
    assemble_c2not2,
    assemble_cnotn,
    control_hamiltonian,
    static_diagonal,
    target_hamiltonian,
)
from rydgate.hilbert import BasisLabel, digit_table, flat_index
from rydgate.interactions import InteractionTable, interaction_table, standard_layout
from rydgate.units import MHZ_2PI

OMEGA_P = 50 * MHZ_2PI
DELTA = 1200 * MHZ_2PI
OMEGA_C = 150 * MHZ_2PI


def model(k=1, N=1, table=None, **kwargs):
    return ModelConfig(
        k=k, N=N,
        omega_p_max=OMEGA_P, delta=DELTA, omega_c=OMEGA_C,
        interactions=table if table is not None else InteractionTable.zeros(k, N),
        **kwargs,
    )


def raman_time(H, fraction=0.37):
    seg = H.schedule.raman_segment
    return seg.t_start + fraction * seg.duration


class TestSiteHamiltonians:
    def test_control_levels(self):
        h = control_hamiltonian(2.0, gamma_r=0.4)
        assert h[1, 2] == h[2, 1] == 1.0
        assert h[2, 2] == pytest.approx(-0.2j)
        assert not h[0].any() and not h[:, 0].any()

    def test_target_levels(self):
        h = target_hamiltonian(2.0, 4.0, 3.0, gamma_p=1.0)
        assert h[0, 2] == h[1, 2] == 1.0
        assert h[2, 3] == 2.0
        assert h[2, 2] == pytest.approx(-3.0 - 0.5j)
        assert h[0, 1] == 0.0

    def test_hermitian_without_decay(self):
        h = target_hamiltonian(1.0, 3.0, 7.0)
        assert np.allclose(h, h.conj().T)

    def test_negative_rabi_rejected(self):
        with pytest.raises(ValueError):
            control_hamiltonian(-1.0)
        with pytest.raises(ValueError):
            target_hamiltonian(1.0, -1.0, 0.0)


class TestModelConfig:
    def test_zero_rates_filled(self):
        config = model(N=3)
        assert config.gamma_p == (0.0, 0.0, 0.0)
        assert not config.has_decay

    def test_table_shape_checked(self):
        with pytest.raises(ValueError):
            model(k=1, N=2, table=InteractionTable.zeros(1, 3))

    def test_rate_count_checked(self):
        with pytest.raises(ValueError):
            model(N=2, gamma_p=(1.0,))

    def test_rates_from_species(self):
        layout = standard_layout("linear", 8.0)
        config = ModelConfig.from_layout(layout, interaction_table(layout), OMEGA_P, DELTA, OMEGA_C)
        assert config.gamma_r == pytest.approx((1 / 548e-6,))
        assert config.gamma_p == pytest.approx((1 / 0.131e-6,) * 2)
        assert config.gamma_R == (0.0, 0.0)
        rydberg = ModelConfig.from_layout(layout, interaction_table(layout), OMEGA_P, DELTA, OMEGA_C,
                                          target_rydberg_decay=True)
        assert rydberg.gamma_R == pytest.approx((1 / 505e-6,) * 2)
        assert not config.without_decay().has_decay


class TestAssembly:
    def test_raman_window_is_target_kronecker_sum(self):
        H = assemble(model())
        t = raman_time(H)
        omega_p = H.schedule.raman_segment.raman.envelope(t - H.schedule.raman_segment.t_start)
        expected = np.kron(np.eye(3), target_hamiltonian(omega_p, OMEGA_C, DELTA))
        assert np.allclose(H.dense(t), expected)

    def test_pi_window_drives_control_only(self):
        H = assemble(model())
        t = 0.5 * H.schedule.segments[0].duration
        expected = np.kron(control_hamiltonian(H.config.omega_r), np.eye(4)) + np.kron(
            np.eye(3), target_hamiltonian(0.0, 0.0, DELTA)
        )
        assert np.allclose(H.dense(t), expected)

    def test_site_spectra_add_without_interactions(self):
        H = assemble(model())
        t = raman_time(H)
        omega_p = H.schedule.raman_segment.raman.envelope(t - H.schedule.raman_segment.t_start)
        site = np.linalg.eigvalsh(target_hamiltonian(omega_p, OMEGA_C, DELTA))
        full = np.linalg.eigvalsh(H.dense(t))
        assert np.allclose(np.sort(full), np.sort(np.tile(site, 3)))

    def test_interaction_projectors(self):
        V, W = 2e9, 3e8
        table = InteractionTable(np.array([[V, V]]), np.array([[0.0, W], [W, 0.0]]), np.zeros((1, 1)))
        diag = static_diagonal(model(N=2, table=table))
        assert diag[flat_index(BasisLabel.parse("r|RA"), 1, 2)] == pytest.approx(V)
        assert diag[flat_index(BasisLabel.parse("r|RR"), 1, 2)] == pytest.approx(2 * V + W)
        assert diag[flat_index(BasisLabel.parse("1|RR"), 1, 2)] == pytest.approx(W)
        assert diag[flat_index(BasisLabel.parse("r|PA"), 1, 2)] == pytest.approx(-DELTA)

    def test_decay_diagonal(self):
        config = model(gamma_r=(2.0,), gamma_p=(6.0,))
        H = assemble(config)
        decay = H.decay_diagonal
        digits = digit_table(1, 1)
        assert np.all(decay <= 0)
        assert decay[flat_index(BasisLabel.parse("r|P"), 1, 1)] == pytest.approx(-4.0)
        assert decay[flat_index(BasisLabel.parse("0|A"), 1, 1)] == 0.0
        assert len(decay) == digits.shape[0]

    def test_hermitian_without_decay(self):
        layout = standard_layout("linear", 6.0)
        H = assemble(model(N=2, table=interaction_table(layout)))
        dense = H.dense(raman_time(H))
        assert np.allclose(dense, dense.conj().T)

    def test_matrix_free_matches_dense(self):
        rng = np.random.default_rng(7)
        layout = standard_layout("linear", 6.0)
        H = assemble(model(N=2, table=interaction_table(layout), gamma_r=(1e3,), gamma_p=(1e6, 1e6)))
        for t in (0.3 * H.schedule.segments[0].duration, raman_time(H)):
            psi = rng.normal(size=H.dim) + 1j * rng.normal(size=H.dim)
            dense = H.dense(t) @ psi
            assert np.linalg.norm(H.apply(t, psi) - dense) <= 1e-12 * np.linalg.norm(dense)
            assert np.allclose(H.sparse(t) @ psi, dense)

    def test_segment_lookup(self):
        H = assemble(model())
        assert H.segment_at(0.0).segment.kind == "pi"
        assert H.segment_at(raman_time(H)).segment.kind == "raman"
        with pytest.raises(ValueError):
            H.segment_at(H.schedule.t_end * 1.5)

    def test_gate_specific_assembly(self):
        with pytest.raises(ValueError):
            assemble_cnotn(model(k=2, N=2))
        with pytest.raises(ValueError):
            assemble_c2not2(model(k=1, N=2))
        assert assemble_c2not2(model(k=2, N=2)).dim == 144

    def test_c2not2_reduces_to_cnot_when_second_control_is_idle(self):
        V, W = 2 * np.pi * 100e6, 2 * np.pi * 10e6
        tt = np.array([[0.0, W], [W, 0.0]])
        c2 = assemble(model(k=2, N=2, table=InteractionTable(np.array([[V, V], [0.0, 0.0]]), tt, np.zeros((2, 2)))))
        c1 = assemble(model(k=1, N=2, table=InteractionTable(np.array([[V, V]]), tt, np.zeros((1, 1)))))

        fraction = 0.41
        dense2 = c2.dense(raman_time(c2, fraction))
        dense1 = c1.dense(raman_time(c1, fraction))
        keep = digit_table(2, 2)[:, 1] == 0
        assert np.allclose(dense2[np.ix_(keep, keep)], dense1)

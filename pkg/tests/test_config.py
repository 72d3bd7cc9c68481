import numpy as np
import pytest

from rydgate.config import build_run, config_hash, load_config, parse_config, preset_spec
from rydgate.errors import ConfigError, ValidityError
from rydgate.units import GHZ_2PI, MHZ_2PI, PS, US


class TestPresets:
    def test_default_is_cnot(self):
        spec = load_config()
        assert spec.preset == "cnot" and spec.gate == "cnotn"
        assert spec.layout.kind == "square"
        assert spec.layout.scale_um == 6.8
        assert spec.fields.omega_p_MHz_2pi == 50.0

    def test_c2not2_preset(self):
        spec = preset_spec("c2not2")
        assert spec.gate == "c2not2"
        assert spec.layout.kind == "rhombus"
        assert spec.fields.omega_p_MHz_2pi == 20.0

    def test_file_keys_override_preset(self):
        spec = parse_config("preset: cnot\nlayout:\n  kind: linear\n")
        assert spec.layout.kind == "linear"
        assert spec.layout.scale_um == 6.8
        assert spec.layout.species == {"control": "Cs133", "target": "Rb87"}


class TestValidation:
    def test_unknown_key_reports_line(self):
        text = "preset: cnot\nfields:\n  omega_p_MHz_2pi: 50\n  colour: red\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text, source="run.yaml")
        assert any(d.startswith("line 4: fields.colour") for d in info.value.diagnostics)
        assert "run.yaml" in str(info.value)

    def test_out_of_range_value_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("fields:\n  omega_p_MHz_2pi: -1\n")
        assert info.value.diagnostics[0].startswith("line 2: fields.omega_p_MHz_2pi")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError) as info:
            parse_config("preset: toffoli\n")
        assert "line 1" in info.value.diagnostics[0]

    def test_not_yaml(self):
        with pytest.raises(ConfigError):
            parse_config("fields: [unclosed\n")

    def test_gate_and_layout_must_agree(self):
        with pytest.raises(ConfigError):
            parse_config("gate: c2not2\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "missing.yaml")

    def test_hash_tracks_content(self):
        assert config_hash(load_config()) == config_hash(parse_config(""))
        assert config_hash(load_config()) != config_hash(parse_config("layout: {scale_um: 7.0}\n"))


class TestBuildRun:
    def test_default_run(self):
        run = build_run(load_config())
        assert (run.model.k, run.model.N) == (1, 4)
        assert run.model.omega_c == pytest.approx(150 * MHZ_2PI)
        assert run.schedule.duration / US == pytest.approx(1.3)
        assert run.integrator.step_pi == pytest.approx(0.5 * PS)
        assert run.model.has_decay
        assert run.warnings == ()

    def test_keyword_overrides(self):
        run = build_run(load_config(), scale_um=8.0, ratio=2.0, intermediate="first", decay=False)
        assert run.model.omega_c == pytest.approx(100 * MHZ_2PI)
        assert run.layout.targets[0].species.intermediate_choice == "first"
        assert not run.model.has_decay
        assert run.interactions.control_target[0, 0] == pytest.approx(14.25 * GHZ_2PI / 8.0**3)

    def test_explicit_coupling_wins_over_preset_ratio(self):
        run = build_run(parse_config("fields: {omega_c_MHz_2pi: 100.0}\n"))
        assert run.model.omega_c == pytest.approx(100 * MHZ_2PI)

    def test_blockade_limit_factor(self):
        run = build_run(parse_config("interactions: {blockade_limit_factor: 1000.0}\n"))
        assert np.allclose(run.interactions.control_target, 1000.0 * run.model.omega_c)
        assert not run.interactions.target_target.any()
        assert run.model.delta < run.model.shift_cutoff < run.interactions.control_target[0, 0]
        assert build_run(load_config()).model.shift_cutoff is None

    def test_species_override_from_run_file(self):
        text = "species_overrides:\n  Rb87:\n    intermediates:\n      second: {lifetime_us: .inf}\n"
        run = build_run(parse_config(text))
        assert run.model.gamma_p == (0.0,) * 4
        assert run.model.gamma_r[0] > 0

    def test_coefficient_and_regime_overrides(self):
        text = (
            "interactions:\n"
            "  coefficients:\n"
            "    Cs133-Rb87: {C3_GHz_um3_2pi: 10.0}\n"
            "  regimes:\n"
            "    Rb87-Rb87: auto-crossover\n"
        )
        run = build_run(parse_config(text))
        assert run.interactions.control_target[0, 0] == pytest.approx(10.0 * GHZ_2PI / 6.8**3)
        assert run.coefficients.get("Rb", "Rb").regime_policy == "auto-crossover"

    def test_new_pair_needs_full_coefficients(self):
        text = "interactions:\n  coefficients:\n    Rb87-Sr88: {C3_GHz_um3_2pi: 1.0}\n"
        with pytest.raises(ConfigError):
            build_run(parse_config(text))

    def test_disabled_blocks(self):
        run = build_run(parse_config("interactions: {target_target: false}\n"))
        assert not run.interactions.target_target.any()

    def test_c2not2_run(self):
        run = build_run(preset_spec("c2not2"))
        assert (run.model.k, run.model.N) == (2, 2)
        assert run.schedule.duration / US == pytest.approx(8.04)
        assert run.interactions.control_control[0, 1] > 0

    def test_below_le_roy_radius(self):
        with pytest.raises(ValidityError):
            build_run(preset_spec("c2not2"), scale_um=1.9)

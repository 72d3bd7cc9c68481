import math

import pytest

from rydgate.species import (
    apply_overrides,
    builtin_registry,
    builtin_species,
    decay_rates,
    dump_registry,
    load_registry,
    parse_registry,
    read_lifetime,
)


class TestBuiltinSpecies:
    def test_aliases_resolve(self):
        assert builtin_species("Rb").name == "Rb87"
        assert builtin_species("Cs").name == "Cs133"

    def test_second_intermediate_is_default(self):
        rb = builtin_species("Rb87")
        assert rb.intermediate_choice == "second"
        assert rb.intermediate_lifetime == pytest.approx(0.131e-6)
        assert rb.rydberg_lifetime == pytest.approx(505e-6)

    def test_first_intermediate_decays_faster(self):
        first = builtin_species("Cs133", "first")
        second = builtin_species("Cs133", "second")
        assert first.intermediate_lifetime == pytest.approx(30.5e-9)
        assert first.gamma_p > second.gamma_p

    def test_unknown_species(self):
        with pytest.raises(ValueError, match="unknown species"):
            builtin_species("K39")

    def test_unknown_intermediate_choice(self):
        with pytest.raises(ValueError):
            builtin_species("Rb87", "third")


class TestDecayRates:
    def test_rates_are_inverse_lifetimes(self):
        gamma_r, gamma_p = decay_rates(builtin_species("Rb87"))
        assert gamma_r == pytest.approx(1 / 505e-6)
        assert gamma_p == pytest.approx(1 / 0.131e-6)

    def test_infinite_lifetime_switches_decay_off(self):
        registry = apply_overrides(builtin_registry(), {"Rb": {"rydberg_lifetime_s": math.inf}})
        gamma_r, gamma_p = decay_rates(builtin_species("Rb87", registry=registry))
        assert gamma_r == 0.0
        assert gamma_p > 0


class TestRegistryFile:
    def test_lifetime_units(self):
        assert read_lifetime({"lifetime_ms": 2.0}) == pytest.approx(2e-3)
        assert read_lifetime({"rydberg_lifetime_ns": 5.0}, prefix="rydberg_") == pytest.approx(5e-9)

    def test_lifetime_needs_exactly_one_unit(self):
        with pytest.raises(ValueError):
            read_lifetime({"lifetime_us": 1.0, "lifetime_ns": 1000.0})
        with pytest.raises(ValueError):
            read_lifetime({})

    def test_dump_then_parse_preserves_registry(self):
        registry = builtin_registry()
        assert parse_registry(dump_registry(registry)) == registry

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "species.yaml"
        path.write_text(dump_registry(builtin_registry()), encoding="utf-8")
        assert load_registry(path) == builtin_registry()

    def test_version_checked(self):
        with pytest.raises(ValueError, match="version"):
            parse_registry("version: 2\nspecies: {}\n")

    def test_unknown_keys_rejected(self):
        text = """
version: 1
species:
  X:
    element: X
    rydberg_label: "50S"
    rydberg_lifetime_us: 100
    colour: blue
    intermediates: {}
"""
        with pytest.raises(ValueError, match="unknown key"):
            parse_registry(text)

    def test_non_positive_lifetime_rejected(self):
        with pytest.raises(ValueError):
            apply_overrides(builtin_registry(), {"Rb87": {"rydberg_lifetime_us": 0.0}})


class TestOverrides:
    def test_intermediate_lifetime_override_keeps_label(self):
        registry = apply_overrides(builtin_registry(), {"Cs133": {"intermediates": {"second": {"lifetime_us": 1.0}}}})
        cs = builtin_species("Cs133", registry=registry)
        assert cs.intermediate_lifetime == pytest.approx(1e-6)
        assert cs.intermediate_label == builtin_species("Cs133").intermediate_label

    def test_new_species_added(self):
        registry = apply_overrides(builtin_registry(), {
            "Sr88": {
                "element": "Sr",
                "rydberg_label": "61S",
                "rydberg_lifetime_us": 80.0,
                "intermediates": {"second": {"label": "5s5p", "lifetime_us": 21.0}},
            }
        })
        assert builtin_species("Sr88", registry=registry).gamma_p == pytest.approx(1 / 21e-6)

    def test_builtin_registry_untouched(self):
        apply_overrides(builtin_registry(), {"Rb87": {"rydberg_lifetime_us": 1.0}})
        assert builtin_species("Rb87").rydberg_lifetime == pytest.approx(505e-6)

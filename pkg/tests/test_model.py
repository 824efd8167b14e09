"""Problem-instance construction: physical parameters, potential
families, named presets, and JSON (de)serialization."""

import json
import math

import pytest

from diracqes import (
    ConfigurationError,
    Geometry,
    PhysicalParams,
    PotentialSpec,
    Preset,
    ProblemInstance,
    ValidationError,
    dumps_instance,
    load_instance,
    loads_instance,
    preset,
    save_instance,
)


class TestPhysicalParams:
    def test_defaults(self):
        p = PhysicalParams(M=1.0, kappa=-1.0)
        assert p.mu_n == 0.0
        assert p.epsilon is None

    def test_zero_kappa_rejected(self):
        with pytest.raises(ValidationError):
            PhysicalParams(M=1.0, kappa=0.0)


class TestPotentialSpec:
    def test_empty_spec_is_zero_everywhere(self):
        spec = PotentialSpec()
        for r in (0.1, 1.0, 3.7):
            assert spec.V(r) == 0.0
            assert spec.W(r) == 0.0
            assert spec.E(r) == 0.0

    def test_channel_evaluation(self):
        spec = PotentialSpec(
            alpha=0.5,
            beta=0.25,
            alpha_poly=(0.1, 0.2),
            beta_poly=(0.3,),
            gamma_poly=(0.4, 0.5),
        )
        r = 2.0
        # polynomial channel i contributes r^(i+1) to V and W, r^i to E
        assert spec.V(r) == pytest.approx(0.5 / r + 0.1 * r + 0.2 * r * r, rel=1e-15)
        assert spec.W(r) == pytest.approx(0.25 / r + 0.3 * r, rel=1e-15)
        assert spec.E(r) == pytest.approx(0.4 + 0.5 * r, rel=1e-15)

    def test_degree_parameter(self):
        assert PotentialSpec().s == 0
        assert PotentialSpec(alpha_poly=(0.1, 0.2), beta_poly=(0.3,),
                             gamma_poly=(0.4, 0.5)).s == 2
        assert PotentialSpec(beta_poly=(1.0,)).s == 1


class TestKappaParity:
    def test_three_d_requires_integer_kappa(self):
        with pytest.raises(ValidationError):
            ProblemInstance(PhysicalParams(M=1.0, kappa=0.5), PotentialSpec(),
                            geometry=Geometry.THREE_D)

    def test_planar_requires_half_odd_integer_kappa(self):
        with pytest.raises(ValidationError):
            ProblemInstance(PhysicalParams(M=1.0, kappa=1.0), PotentialSpec(),
                            geometry=Geometry.PLANAR)

    def test_valid_parities_accepted(self):
        ProblemInstance(PhysicalParams(M=1.0, kappa=-2.0), PotentialSpec(),
                        geometry=Geometry.THREE_D)
        ProblemInstance(PhysicalParams(M=1.0, kappa=-0.5), PotentialSpec(),
                        geometry=Geometry.PLANAR)


class TestPresets:
    def test_oscillator_uses_tensor_channel(self):
        inst = preset(Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0, "mu_n": 1.0})
        assert inst.geometry is Geometry.THREE_D
        assert inst.params.mu_n == 1.0
        assert inst.potentials.alpha == 0.0
        assert inst.potentials.beta == 0.0
        assert inst.potentials.gamma_poly == (0.0, -1.0)
        assert inst.potentials.alpha_poly == ()
        assert inst.potentials.beta_poly == ()

    def test_coulomb_has_only_inverse_r_channels(self):
        inst = preset(Preset.DIRAC_COULOMB,
                      {"M": 1.0, "kappa": -1.0, "alpha": 0.5, "beta": 0.25})
        assert inst.params.mu_n == 0.0
        assert inst.potentials.alpha == 0.5
        assert inst.potentials.beta == 0.25
        assert inst.potentials.alpha_poly == ()
        assert inst.potentials.gamma_poly == ()

    def test_extended_oscillator_forces_consistent_couplings(self):
        inst = preset(Preset.EXTENDED_OSCILLATOR_ES,
                      {"M": 1.0, "kappa": 1.0, "beta1": 4.0, "gamma1": 3.0})
        # the vector 1/r strength and the constant tensor term are slaved
        # to the linear channels so that a pure rotation decouples them
        assert inst.params.mu_n == -1.0
        assert inst.potentials.alpha == 0.0
        assert inst.potentials.beta == pytest.approx(-4.0 / 3.0, rel=1e-15)
        assert inst.potentials.beta_poly == (4.0,)
        assert inst.potentials.gamma_poly[0] == pytest.approx(-4.0 / 3.0, rel=1e-15)
        assert inst.potentials.gamma_poly[1] == 3.0

    def test_planar_preset_geometry_and_field_term(self):
        inst = preset(Preset.PLANAR_COULOMB_MAGNETIC,
                      {"M": 0.0, "kappa": -0.5, "alpha": 0.5, "Btilde": 1.0})
        assert inst.geometry is Geometry.PLANAR
        assert inst.params.mu_n == 1.0
        assert inst.potentials.alpha == 0.5
        # uniform field of strength Btilde enters as a linear tensor term
        assert inst.potentials.gamma_poly == (0.0, 0.5)

    def test_extended_qes_preset_keeps_free_couplings(self):
        inst = preset(Preset.EXTENDED_OSCILLATOR_QES,
                      {"M": 1.0, "kappa": -1.0, "alpha": 0.5, "beta1": 1.0,
                       "gamma1": 1.0, "gamma0": 0.5})
        assert inst.params.mu_n == -1.0
        assert inst.potentials.alpha == 0.5
        assert inst.potentials.beta_poly == (1.0,)
        assert inst.potentials.gamma_poly == (0.5, 1.0)

    def test_preset_accepts_string_name(self):
        a = preset("DiracOscillator", {"M": 1.0, "kappa": 1.0, "mu_n": 1.0})
        b = preset(Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0, "mu_n": 1.0})
        assert a == b

    def test_unknown_preset_name_rejected(self):
        with pytest.raises(ConfigurationError):
            preset("NoSuchFamily", {"M": 1.0, "kappa": 1.0})

    def test_missing_parameter_rejected(self):
        with pytest.raises(ConfigurationError):
            preset(Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0})

    def test_extra_parameter_rejected(self):
        with pytest.raises(ConfigurationError):
            preset(Preset.DIRAC_OSCILLATOR,
                   {"M": 1.0, "kappa": 1.0, "mu_n": 1.0, "alpha": 0.5})

    def test_extended_oscillator_zero_gamma1_rejected(self):
        with pytest.raises(ConfigurationError):
            preset(Preset.EXTENDED_OSCILLATOR_ES,
                   {"M": 1.0, "kappa": 1.0, "beta1": 4.0, "gamma1": 0.0})


_ALL_PRESET_ARGS = [
    (Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0, "mu_n": 1.0}),
    (Preset.EXTENDED_OSCILLATOR_ES,
     {"M": 1.0, "kappa": 1.0, "beta1": 4.0, "gamma1": 3.0}),
    (Preset.DIRAC_COULOMB, {"M": 1.0, "kappa": -1.0, "alpha": 0.5, "beta": 0.0}),
    (Preset.PLANAR_COULOMB_MAGNETIC,
     {"M": 0.0, "kappa": -0.5, "alpha": 0.5, "Btilde": 1.0}),
    (Preset.EXTENDED_OSCILLATOR_QES,
     {"M": 1.0, "kappa": -1.0, "alpha": 0.5, "beta1": 1.0, "gamma1": 1.0,
      "gamma0": 0.5}),
]


class TestSerialization:
    @pytest.mark.parametrize("name,params", _ALL_PRESET_ARGS,
                             ids=[p.value for p, _ in _ALL_PRESET_ARGS])
    def test_json_round_trip(self, name, params):
        inst = preset(name, params)
        assert loads_instance(dumps_instance(inst)) == inst

    def test_document_key_set(self):
        inst = preset(Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0, "mu_n": 1.0})
        doc = json.loads(dumps_instance(inst))
        assert sorted(doc) == ["M", "alpha", "alpha_poly", "beta", "beta_poly",
                               "gamma_poly", "geometry", "kappa", "mu_n"]
        assert doc["geometry"] == "3d"

    def test_dump_ends_with_single_newline(self):
        text = dumps_instance(
            preset(Preset.DIRAC_COULOMB,
                   {"M": 1.0, "kappa": -1.0, "alpha": 0.5, "beta": 0.0}))
        assert text.endswith("\n")
        assert not text.endswith("\n\n")

    def test_file_round_trip(self, tmp_path):
        inst = preset(Preset.PLANAR_COULOMB_MAGNETIC,
                      {"M": 0.0, "kappa": -0.5, "alpha": 0.5, "Btilde": 1.0})
        path = str(tmp_path / "instance.json")
        save_instance(inst, path)
        assert load_instance(path) == inst

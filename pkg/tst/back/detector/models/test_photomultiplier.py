import math

import numpy as np
from pydantic import ValidationError
from pytest import approx, raises

from back.detector.models import coupled_resonators as cr
from back.detector.models import photomultiplier as pm
from back.detector.utils import JpmLevel, Label, WellLabel
from back.detector.utils import units
from back.detector.utils.custom_exceptions import (
    BoundaryLeak,
    NoBarrier,
    NoConvergence,
    PreconditionViolated,
)

SPEC = pm.JpmSpec.from_config()
SETTINGS = pm.SpectrumSettings.from_config()
SPECTRUM = pm.solve_spectrum(SPEC, **SETTINGS.solver_kwargs(SPEC))
CHARGE = pm.charge_matrix(SPECTRUM)

# Without a junction the JPM is a harmonic LC oscillator.
HARMONIC = SPEC.model_validate(SPEC.model_dump() | {"critical_current": 0.0})
HARMONIC_KWARGS = {"grid_points": 4001, "single_well_states": 12}

BUFFER = cr.resonator_derived(
    cr.ResonatorSpec(capacitance=5e-13, inductance=5e-10),
    loaded_capacitance=5e-13,
    effective_energy=0.0,
    u2=0.0,
    u3=0.0,
)


def _plasma_frequency(spec: pm.JpmSpec) -> float:
    return math.sqrt(8 * spec.loaded_capacitive_energy * spec.inductive_energy)


class TestJpmSpec:
    @staticmethod
    def test_from_config():
        assert SPEC.bias_flux == 0.6316
        assert SPEC.loaded_capacitance == SPEC.capacitance

    @staticmethod
    def test_energies():
        assert units.to_ghz(SPEC.josephson_energy) == approx(1243.4, rel=5e-3)
        assert units.to_ghz(SPEC.inductive_energy) == approx(544.0, rel=5e-3)
        assert units.to_mhz(SPEC.capacitive_energy) == approx(47.9, rel=5e-3)

    @staticmethod
    def test_loaded_capacitance():
        loaded = SPEC.with_coupling_capacitance(1e-15)

        assert loaded.loaded_capacitance == approx(SPEC.capacitance + 1e-15)
        assert loaded.loaded_capacitive_energy < SPEC.capacitive_energy

    @staticmethod
    def test_with_bias():
        assert SPEC.with_bias(0.5).external_phase == approx(math.pi)

    @staticmethod
    def test_negative_capacitance_is_rejected():
        with raises(ValidationError):
            pm.JpmSpec(critical_current=1e-6, loop_inductance=3e-10, capacitance=-1e-12)

    @staticmethod
    def test_settings_from_config():
        kwargs = SETTINGS.solver_kwargs(SPEC)

        assert kwargs["grid_points"] == 8001
        assert kwargs["phi_range"] == approx(
            (SPEC.external_phase - 6.0, SPEC.external_phase + 6.0)
        )


class TestLandscape:
    @staticmethod
    def test_double_well_at_operating_bias():
        landscape = SPECTRUM.landscape

        assert landscape.is_double_well
        assert len(landscape.minima) == 2
        assert landscape.deep_minimum[1] < landscape.shallow_minimum[1]
        assert landscape.shallow_minimum[1] < landscape.barrier_top[1]
        assert landscape.shallow_side == WellLabel.LEFT_WELL
        assert landscape.deep_side == WellLabel.RIGHT_WELL

    @staticmethod
    def test_stationary_points_are_roots():
        for phi, _ in SPECTRUM.landscape.minima + SPECTRUM.landscape.maxima:
            gradient = pm._potential_gradient(phi, SPEC)

            assert abs(gradient) < 1e-6 * SPEC.josephson_energy

    @staticmethod
    def test_single_well_at_zero_bias():
        phi = np.linspace(-6, 6, 2001)
        landscape = pm.potential_landscape(SPEC.with_bias(0.0), phi)

        assert not landscape.is_double_well
        assert landscape.deep_minimum[0] == approx(0.0, abs=1e-9)
        with raises(NoBarrier):
            _ = landscape.shallow_side

    @staticmethod
    def test_potential_profile():
        phi = np.linspace(0, 2 * math.pi, 11)
        profile = pm.potential_profile(SPEC, phi)

        assert list(profile.columns) == [Label.PHI.value, Label.POTENTIAL_GHZ.value]
        assert profile[Label.POTENTIAL_GHZ.value].iloc[0] == approx(
            units.to_ghz(pm.jpm_potential(0.0, SPEC))
        )


class TestHarmonicSpectrum:
    @staticmethod
    def test_levels_are_evenly_spaced():
        spectrum = pm.solve_spectrum(HARMONIC, **HARMONIC_KWARGS)
        spacings = np.diff(spectrum.energies)

        assert spectrum.labels is None and spectrum.role_map is None
        assert spacings == approx(_plasma_frequency(HARMONIC) * np.ones(len(spacings)), rel=1e-6)
        assert spectrum.energies[0] == approx(0.5 * _plasma_frequency(HARMONIC), rel=1e-6)

    @staticmethod
    def test_plain_stencil_is_less_accurate():
        errors = {}
        for order in (2, 8):
            spectrum = pm.solve_spectrum(HARMONIC, stencil_order=order, **HARMONIC_KWARGS)
            errors[order] = abs(spectrum.energies[5] - 5.5 * _plasma_frequency(HARMONIC))

        assert errors[8] < errors[2]

    @staticmethod
    def test_wavefunctions_are_normalized():
        spectrum = pm.solve_spectrum(HARMONIC, **HARMONIC_KWARGS)
        norms = np.sum(spectrum.wavefunctions**2, axis=0) * spectrum.spacing

        assert norms == approx(np.ones(spectrum.size))
        assert spectrum.mean_phase() == approx(
            HARMONIC.external_phase * np.ones(spectrum.size), abs=1e-6
        )

    @staticmethod
    def test_convergence_check_passes():
        spectrum = pm.solve_spectrum(
            HARMONIC, verify_convergence=True, convergence_tolerance=1e-6, **HARMONIC_KWARGS
        )

        assert spectrum.size == 12

    @staticmethod
    def test_too_few_grid_points():
        with raises(PreconditionViolated):
            pm.solve_spectrum(HARMONIC, grid_points=500)

    @staticmethod
    def test_boundary_leak():
        center = HARMONIC.external_phase

        with raises(BoundaryLeak):
            pm.solve_spectrum(
                HARMONIC, grid_points=1001, phi_range=(center - 0.05, center + 0.05)
            )


class TestDoubleWellSpectrum:
    @staticmethod
    def test_well_counts():
        counts = SPECTRUM.label_counts()

        assert counts[WellLabel.LEFT_WELL] == 2
        assert counts[WellLabel.RIGHT_WELL] == 94
        assert counts[WellLabel.SUPERBARRIER] == SETTINGS.superbarrier_states

    @staticmethod
    def test_energies_are_sorted():
        assert np.all(np.diff(SPECTRUM.eigenvalues) > 0)

    @staticmethod
    def test_superbarrier_states_lie_on_top():
        ceiling = SPECTRUM.landscape.barrier_top[1]
        tie = pm.TIE_TOLERANCE * SPECTRUM.energy_scale

        for energy, label in zip(SPECTRUM.energies, SPECTRUM.labels):
            if label == WellLabel.SUPERBARRIER:
                assert energy >= ceiling - tie
            else:
                assert energy < ceiling

    @staticmethod
    def test_roles():
        ground, excited, upper = (
            SPECTRUM.index(level) for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F)
        )

        assert SPECTRUM.labels[ground] == WellLabel.LEFT_WELL
        assert SPECTRUM.labels[excited] == WellLabel.LEFT_WELL
        assert SPECTRUM.labels[upper] == WellLabel.RIGHT_WELL
        assert ground < excited
        assert SPECTRUM.level_number(JpmLevel.G) == ground + 1

    @staticmethod
    def test_qubit_frequency():
        omega_ge = units.to_ghz(SPECTRUM.transition_frequency(JpmLevel.E, JpmLevel.G))

        assert 5.0 < omega_ge < 15.0
        assert omega_ge < units.to_ghz(_plasma_frequency(SPEC)) * 2

    @staticmethod
    def test_to_frame():
        frame = SPECTRUM.to_frame()

        assert list(frame.columns) == [
            Label.LEVEL.value,
            Label.ENERGY_GHZ.value,
            Label.WELL.value,
            Label.MEAN_PHI.value,
        ]
        assert frame[Label.LEVEL.value].iloc[0] == 1
        assert len(frame) == SPECTRUM.size

    @staticmethod
    def test_wavefunction_samples():
        samples = SPECTRUM.wavefunction_samples([0, 3], stride=100)

        assert list(samples.columns) == [Label.PHI.value, "psi_1", "psi_4"]
        assert len(samples) == math.ceil(len(SPECTRUM.grid) / 100)

    @staticmethod
    def test_classify_single_well_fails():
        spectrum = pm.solve_spectrum(HARMONIC, **HARMONIC_KWARGS)

        with raises(NoBarrier):
            pm.classify_states(spectrum, HARMONIC)


class TestChargeMatrix:
    @staticmethod
    def test_hermitian():
        elements = CHARGE.elements

        assert np.max(np.abs(elements - elements.conj().T)) < 1e-12
        assert CHARGE.asymmetry < 1e-6

    @staticmethod
    def test_purely_imaginary_for_real_states():
        assert np.max(np.abs(CHARGE.elements.real)) < 1e-9

    @staticmethod
    def test_harmonic_ladder():
        spectrum = pm.solve_spectrum(HARMONIC, **HARMONIC_KWARGS)
        charge = pm.charge_matrix(spectrum, (0, 4))
        magnitudes = np.abs(charge.elements)

        assert magnitudes[1, 0] ** 2 == approx(magnitudes[2, 1] ** 2 / 2, rel=1e-4)
        assert magnitudes[2, 0] == approx(0.0, abs=1e-8)

    @staticmethod
    def test_window():
        charge = pm.charge_matrix(SPECTRUM, (2, 6))

        assert charge.levels == (2, 3, 4, 5)
        assert charge.element(3, 2) == approx(CHARGE.element(3, 2))
        assert charge.magnitudes().index.name == Label.LEVEL.value

    @staticmethod
    def test_window_out_of_range():
        with raises(PreconditionViolated):
            pm.charge_matrix(SPECTRUM, (0, SPECTRUM.size + 1))


class TestRates:
    @staticmethod
    def test_rate_table():
        rates = pm.rate_table(CHARGE, SPECTRUM)

        assert rates.internal[(JpmLevel.E, JpmLevel.G)] == 1.0
        assert rates.internal[(JpmLevel.F, JpmLevel.G)] >= 0
        assert rates.internal[(JpmLevel.F, JpmLevel.E)] >= 0
        assert rates.sink[JpmLevel.F] > rates.sink[JpmLevel.G]
        assert rates.engineered == rates.internal

    @staticmethod
    def test_absolute_rates():
        rates = pm.rate_table(CHARGE, SPECTRUM)
        absolute = rates.absolute(units.from_mhz(1.0), units.from_mhz(4.0))

        assert absolute["kappa_fe"] == approx(4 * absolute["Gamma_fe"])
        assert absolute["gamma_f"] == approx(rates.sink[JpmLevel.F] * units.from_mhz(5.0))

    @staticmethod
    def test_charge_window_must_cover_the_deep_well():
        window = (SPECTRUM.index(JpmLevel.G), SPECTRUM.size)

        with raises(PreconditionViolated):
            pm.rate_table(pm.charge_matrix(SPECTRUM, window), SPECTRUM)

    @staticmethod
    def test_rate_table_keys():
        assert set(pm.rate_table(CHARGE, SPECTRUM).to_dict()) == {
            "Gamma_fg/Gamma_eg",
            "Gamma_fe/Gamma_eg",
            "Gamma_g_sink/Gamma_eg",
            "Gamma_e_sink/Gamma_eg",
            "Gamma_f_sink/Gamma_eg",
        }


class TestCoupling:
    @staticmethod
    def test_no_coupling_without_capacitances():
        coupling = pm.drive_and_coupling(SPEC, CHARGE, SPECTRUM, BUFFER)

        assert coupling.coupling_strength == 0.0
        assert coupling.drive_strength == 0.0

    @staticmethod
    def test_coupling_grows_with_capacitance():
        weak = pm.drive_and_coupling(
            SPEC.with_coupling_capacitance(1e-15), CHARGE, SPECTRUM, BUFFER
        )
        strong = pm.drive_and_coupling(
            SPEC.with_coupling_capacitance(2e-15), CHARGE, SPECTRUM, BUFFER
        )

        assert 0 < weak.coupling_strength < strong.coupling_strength

    @staticmethod
    def test_solve_coupling_capacitance():
        target = pm.drive_and_coupling(
            SPEC.with_coupling_capacitance(3e-15), CHARGE, SPECTRUM, BUFFER
        ).coupling_strength

        capacitance = pm.solve_coupling_capacitance(SPEC, CHARGE, SPECTRUM, BUFFER, target)

        assert capacitance == approx(3e-15, rel=1e-6)

    @staticmethod
    def test_drive_amplitude_round_trip():
        target = units.from_mhz(220.6)
        voltage = pm.drive_amplitude_for(CHARGE, SPECTRUM, target)
        driven = SPEC.model_validate(
            SPEC.model_dump() | {"drive_capacitance": 1e-15, "drive_voltage": 1.0}
        )
        effective = 1.0 * 1e-15 / driven.loaded_capacitance
        driven = driven.model_validate(driven.model_dump() | {"drive_voltage": voltage / effective})

        coupling = pm.drive_and_coupling(driven, CHARGE, SPECTRUM, BUFFER)

        assert coupling.drive_strength == approx(target, rel=1e-9)

    @staticmethod
    def test_waveguide_decay_rate():
        ground, excited = SPECTRUM.index(JpmLevel.G), SPECTRUM.index(JpmLevel.E)
        bare = pm.waveguide_decay_rate(SPEC, CHARGE, SPECTRUM, excited, ground)
        coupled = pm.waveguide_decay_rate(
            SPEC.model_validate(SPEC.model_dump() | {"waveguide_capacitance": 1e-15}),
            CHARGE,
            SPECTRUM,
            excited,
            ground,
        )

        assert bare == 0.0
        assert coupled > 0

    @staticmethod
    def test_rwa_validity():
        report = pm.rwa_validity(
            CHARGE,
            SPECTRUM,
            two_photon=units.from_mhz(20.4),
            coupling_strength=units.from_mhz(50.0),
            drive_strength=units.from_mhz(220.6),
            omega_1=units.from_ghz(5.379),
            omega_2=units.from_ghz(10.758),
        )

        assert report["g21/omega_1"]["valid"]
        assert report["g21/omega_1"]["ratio"] == approx(20.4e-3 / 5.379)
        assert all(entry["ratio"] >= 0 for entry in report.values())


class TestDephasing:
    @staticmethod
    def test_dephasing_rates():
        rates = pm.dephasing_rates(
            SPEC, settings=SETTINGS, **pm.DephasingSettings.from_config().solver_kwargs()
        )

        for level in (JpmLevel.E, JpmLevel.F):
            assert math.isfinite(rates.slopes[level])
            assert rates.dephasing[level] > 0
            assert rates.zeta[level] == approx(
                math.log(2.516 * rates.dephasing[level] / rates.cutoff), abs=1e-5
            )
        assert "Gamma_phi_e_MHz" in rates.to_dict()

    @staticmethod
    def test_no_noise_no_dephasing():
        rates = pm.dephasing_rates(
            SPEC, flux_noise_amplitude=0.0, cutoff=units.from_hz(1.0), settings=SETTINGS
        )

        assert rates.dephasing == {JpmLevel.E: 0.0, JpmLevel.F: 0.0}


class TestOperatingPoint:
    @staticmethod
    def test_level_numbers():
        assert SPECTRUM.level_number(JpmLevel.G) == 93
        assert SPECTRUM.level_number(JpmLevel.E) == 95
        assert SPECTRUM.level_number(JpmLevel.F) == 96

    @staticmethod
    def test_transition_frequencies():
        omega_ge = SPECTRUM.transition_frequency(JpmLevel.E, JpmLevel.G)
        omega_ef = SPECTRUM.transition_frequency(JpmLevel.F, JpmLevel.E)

        assert units.to_ghz(omega_ge) == approx(10.758, rel=1e-2)
        assert units.to_ghz(omega_ge) == approx(10.7587, rel=1e-4)
        assert units.to_ghz(omega_ef) == approx(3.8084, rel=1e-3)

    @staticmethod
    def test_rate_ratios():
        ratios = pm.rate_table(CHARGE, SPECTRUM).to_dict()

        assert ratios["Gamma_fg/Gamma_eg"] == approx(0.01847, rel=1e-2)
        assert ratios["Gamma_fe/Gamma_eg"] == approx(0.05337, rel=1e-2)
        assert ratios["Gamma_e_sink/Gamma_eg"] == approx(0.4537, rel=1e-2)
        assert ratios["Gamma_f_sink/Gamma_eg"] == approx(120.36, rel=1e-2)
        assert ratios["Gamma_g_sink/Gamma_eg"] == approx(0.00067, rel=5e-2)

    @staticmethod
    def test_dephasing_estimates():
        rates = pm.dephasing_rates(
            SPEC, settings=SETTINGS, **pm.DephasingSettings.from_config().solver_kwargs()
        )

        assert units.to_mhz(rates.dephasing[JpmLevel.E]) == approx(1.3, rel=0.1)
        assert units.to_mhz(rates.dephasing[JpmLevel.F]) == approx(30.0, rel=0.1)
        assert units.to_mhz(rates.dephasing[JpmLevel.E]) == approx(1.22, rel=2e-2)
        assert units.to_mhz(rates.dephasing[JpmLevel.F]) == approx(28.2, rel=2e-2)


class TestDiscretization:
    @staticmethod
    def test_plain_stencil_is_second_order():
        exact = 0.5 * _plasma_frequency(HARMONIC)
        errors = [
            abs(
                pm.solve_spectrum(
                    HARMONIC, points, stencil_order=2, single_well_states=3
                ).energies[0]
                - exact
            )
            for points in (1001, 2001, 4001)
        ]
        slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))

        assert slopes == approx([2.0, 2.0], abs=0.2)

    @staticmethod
    def test_well_counts_are_grid_independent():
        variants = [
            SETTINGS.model_copy(update={"grid_points": 16001}),
            SETTINGS.model_copy(update={"phi_half_width": 5.4}),
            SETTINGS.model_copy(update={"phi_half_width": 6.6}),
        ]

        for settings in variants:
            counts = pm.solve_spectrum(SPEC, **settings.solver_kwargs(SPEC)).label_counts()

            assert (counts[WellLabel.LEFT_WELL], counts[WellLabel.RIGHT_WELL]) == (2, 94)

    @staticmethod
    def test_eigensolver_failure(monkeypatch):
        def stalled(*_, **__):
            raise pm.sparse_linalg.ArpackNoConvergence(
                "ARPACK error -1: No convergence", np.array([]), np.array([])
            )

        monkeypatch.setattr(pm.sparse_linalg, "eigsh", stalled)

        with raises(NoConvergence):
            pm.solve_spectrum(HARMONIC, **HARMONIC_KWARGS)

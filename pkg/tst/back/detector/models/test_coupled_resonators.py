import math

import numpy as np
from pydantic import ValidationError
from pytest import approx, raises

from back.detector.models import coupled_resonators as cr
from back.detector.utils import CouplerVariant, Label
from back.detector.utils import units
from back.detector.utils.custom_exceptions import NoConvergence, PreconditionViolated

RESONATORS = cr.ResonatorSpec.pair_from_config()
COUPLER = cr.CouplerSpec.from_config()
BI_SQUID = cr.CouplerSpec.from_config(variant=CouplerVariant.BI_SQUID)
STRONG_COUPLER = cr.CouplerSpec.from_config(critical_current=1e-6)


class TestSpecs:
    @staticmethod
    def test_from_config():
        assert COUPLER.variant == CouplerVariant.ASYMMETRIC_SQUID
        assert COUPLER.asymmetry == 0.5
        assert RESONATORS[0].capacitance == 1e-12

    @staticmethod
    def test_asymmetric_squid_has_no_sub_loop():
        with raises(ValidationError):
            cr.CouplerSpec(critical_current=5e-8, asymmetry=0.5, flux_prime=0.1)

    @staticmethod
    def test_unknown_field_is_rejected():
        with raises(ValidationError):
            cr.ResonatorSpec(capacitance=1e-12, inductance=1e-9, quality=1e4)

    @staticmethod
    def test_total_capacitance():
        coupler = BI_SQUID.model_validate(
            BI_SQUID.model_dump()
            | {"junction_capacitance": 2e-15, "small_junction_capacitance": 1e-15}
        )

        assert coupler.total_capacitance == approx(5e-15)

    @staticmethod
    def test_with_fluxes():
        shifted = BI_SQUID.with_fluxes(0.3, 0.2)

        assert (shifted.flux, shifted.flux_prime) == (0.3, 0.2)
        assert BI_SQUID.flux == 0.0


class TestCouplerEnergy:
    @staticmethod
    def test_effective_energy_at_symmetric_fluxes():
        josephson = COUPLER.josephson_energy

        assert cr.effective_josephson_energy(COUPLER.with_fluxes(0.0)) == approx(1.5 * josephson)
        assert cr.effective_josephson_energy(COUPLER.with_fluxes(0.5)) == approx(0.5 * josephson)

    @staticmethod
    def test_effective_energy_never_negative():
        for flux in np.linspace(0.0, 2.0, 41):
            for flux_prime in np.linspace(0.0, 1.0, 11):
                point = BI_SQUID.with_fluxes(float(flux), float(flux_prime))

                assert cr.effective_josephson_energy(point) >= 0

    @staticmethod
    def test_asymmetry_factor():
        assert cr.asymmetry_factor(COUPLER) == approx(1 / 3)

    @staticmethod
    def test_phase_shift_is_continuous():
        thetas = [
            cr.phase_shift(COUPLER.with_fluxes(float(flux))) for flux in np.linspace(0, 1, 201)
        ]

        assert thetas[0] == 0.0
        assert thetas[-1] == approx(2 * math.pi)
        assert np.max(np.abs(np.diff(thetas))) < 0.2

    @staticmethod
    def test_taylor_coefficients():
        delta = 0.3

        assert cr.taylor_coefficient(0, delta) == approx(math.cos(delta))
        assert cr.taylor_coefficient(1, delta) == approx(-math.sin(delta))
        assert cr.taylor_coefficient(2, delta) == approx(-math.cos(delta))
        assert cr.taylor_coefficient(3, delta) == approx(math.sin(delta))
        assert cr.taylor_coefficient(4, delta) == approx(math.cos(delta))


class TestEquilibrium:
    @staticmethod
    def test_residuals_vanish():
        inductive_1 = units.inductive_energy(RESONATORS[0].inductance)
        inductive_2 = units.inductive_energy(RESONATORS[1].inductance)
        effective = 0.2 * inductive_1
        theta = 1.1

        phi1, phi2 = cr.solve_equilibrium_phases(inductive_1, inductive_2, effective, theta)
        sine = effective * math.sin(phi1 - phi2 - theta)

        assert abs(inductive_1 * phi1 + sine) / inductive_1 < 1e-12
        assert abs(inductive_2 * phi2 - sine) / inductive_1 < 1e-12

    @staticmethod
    def test_zero_coupling():
        assert cr.solve_equilibrium_phases(1.0, 2.0, 0.0, 0.7) == (0.0, 0.0)

    @staticmethod
    def test_multistable_regime_is_rejected():
        with raises(PreconditionViolated):
            cr.solve_equilibrium_phases(1.0, 2.0, 1.0, 0.0)

    @staticmethod
    def test_newton_settings_from_config():
        newton = cr.NewtonSettings.from_config()

        assert newton.max_iterations == 100
        assert newton.tolerance == 1e-12

    @staticmethod
    def test_newton_budget_is_honoured():
        no_steps = cr.NewtonSettings(max_iterations=0)

        with raises(NoConvergence):
            cr.equilibrium_delta(RESONATORS, COUPLER.with_fluxes(0.3), no_steps)
        with raises(NoConvergence):
            cr.coupling_set(RESONATORS, COUPLER.with_fluxes(0.3), newton=no_steps)

    @staticmethod
    def test_loose_tolerance_stops_early():
        loose = cr.equilibrium_delta(
            RESONATORS, COUPLER.with_fluxes(0.3), cr.NewtonSettings(tolerance=1e-2)
        )
        tight = cr.equilibrium_delta(RESONATORS, COUPLER.with_fluxes(0.3))

        assert loose[3] == tight[3]
        assert loose[2] == approx(tight[2], abs=0.3)

    @staticmethod
    def test_singular_jacobian(monkeypatch):
        def singular(*_):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr(np.linalg, "solve", singular)

        with raises(NoConvergence):
            cr.solve_equilibrium_phases(1.0, 2.0, 0.5, 1.1)


class TestCouplingSet:
    @staticmethod
    def test_bare_resonator_frequency():
        storage = RESONATORS[0]
        derived = cr.resonator_derived(
            storage, loaded_capacitance=storage.capacitance, effective_energy=0.0, u2=0.0, u3=0.0
        )

        assert derived.bare_frequency == approx(
            1 / math.sqrt(storage.inductance * storage.capacitance), rel=1e-9
        )
        assert derived.self_kerr == 0.0
        assert derived.renormalized_frequency == derived.bare_frequency

    @staticmethod
    def test_renormalized_inductance_must_stay_positive():
        storage = RESONATORS[0]

        with raises(PreconditionViolated):
            cr.resonator_derived(
                storage,
                loaded_capacitance=storage.capacitance,
                effective_energy=2 * units.inductive_energy(storage.inductance),
                u2=1.0,
                u3=0.0,
            )

    @staticmethod
    def test_two_photon_coupling_formula():
        point = COUPLER.with_fluxes(0.3)
        derived, coupler, couplings = cr.coupling_set(RESONATORS, point)
        expected = (
            0.5
            * coupler.effective_energy
            * derived[0].phase_zpf ** 2
            * derived[1].phase_zpf
            * math.sin(coupler.delta)
        )

        assert couplings.two_photon == approx(expected)
        assert len(couplings.inductive) == 15

    @staticmethod
    def test_coefficients_are_bounded():
        _, coupler, _ = cr.coupling_set(RESONATORS, COUPLER.with_fluxes(0.37))

        for coefficient in coupler.taylor_coefficients.values():
            assert -1 <= coefficient <= 1
        assert coupler.delta == approx(coupler.phi1_min - coupler.phi2_min - coupler.phase_shift)

    @staticmethod
    def test_k_max_too_small():
        with raises(PreconditionViolated):
            cr.coupling_set(RESONATORS, COUPLER, k_max=2)

    @staticmethod
    def test_strong_coupler_is_rejected():
        with raises(PreconditionViolated):
            cr.coupling_set(RESONATORS, STRONG_COUPLER)


class TestOddParity:
    @staticmethod
    def test_find_odd_parity_flux():
        point = cr.find_odd_parity_flux(COUPLER, RESONATORS)

        assert 0 <= point.flux < 1
        assert abs(point.delta - point.target) < 1e-10
        assert abs(point.target / math.pi - 0.5) % 1 == approx(0.0, abs=1e-12)
        assert not point.coupling_vanishes

    @staticmethod
    def test_even_couplings_vanish_at_odd_parity():
        point = cr.find_odd_parity_flux(COUPLER, RESONATORS)
        _, _, couplings = cr.coupling_set(RESONATORS, COUPLER.with_fluxes(point.flux))

        for (power_1, power_2), coupling in couplings.inductive.items():
            if (power_1 + power_2) % 2 == 0:
                assert abs(coupling) < 1e-10 * abs(couplings.two_photon)

    @staticmethod
    def test_odd_parity_locus():
        locus = cr.odd_parity_locus(RESONATORS, COUPLER, [0.2, 0.8])

        assert len(locus) == 2
        assert all(abs(point.two_photon) > 0 for point in locus)

    @staticmethod
    def test_coupler_off_point():
        flux, flux_prime = cr.coupler_off_point(BI_SQUID, 0)

        assert flux_prime == approx(math.acos(0.5) / math.pi)
        assert flux == approx(0.5 - flux_prime / 2)
        residual = cr.effective_josephson_energy(BI_SQUID.with_fluxes(flux, flux_prime))
        assert residual < 1e-9 * BI_SQUID.josephson_energy

    @staticmethod
    def test_coupler_off_point_needs_bi_squid():
        with raises(PreconditionViolated):
            cr.coupler_off_point(COUPLER)


class TestFluxMap:
    @staticmethod
    def test_flux_map():
        data = cr.flux_map(RESONATORS, COUPLER, np.linspace(0, 1, 5), np.array([0.0]))

        assert list(data.columns) == cr.FLUX_MAP_COLUMNS
        assert len(data) == 5
        assert not data[Label.G21_MHZ.value].isna().any()

    @staticmethod
    def test_flux_map_marks_multistable_cells():
        data = cr.flux_map(RESONATORS, STRONG_COUPLER, np.array([0.0]), np.array([0.0]))

        assert data[Label.G21_MHZ.value].isna().all()
        assert data[Label.E_EFF_GHZ.value].iloc[0] > 0

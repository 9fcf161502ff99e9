"""
Provides the quantization chain of two resonators coupled through a SQUID or BiSQUID:
from raw circuit elements and static fluxes to the two-photon coupling g21,
the self-Kerr strengths and the renormalized resonator frequencies.

Energies are angular frequencies (rad/s), fluxes are in units of Phi_0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize

from back.detector.utils import CouplerVariant, Label
from back.detector.utils import units
from back.detector.utils.custom_exceptions import (
    NoConvergence,
    NoRoot,
    PreconditionViolated,
)
from config import Config

logger = logging.getLogger(__name__)

FLUX_MAP_COLUMNS = [
    Label.PHI_C.value,
    Label.PHI_C_PRIME.value,
    Label.E_EFF_GHZ.value,
    Label.G21_MHZ.value,
    Label.PARITY_RESIDUAL.value,
]


class ResonatorSpec(BaseModel):
    """
    Lumped LC resonator: capacitance (F), inductance (H), single-photon loss rate (rad/s).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    capacitance: float = Field(gt=0)
    inductance: float = Field(gt=0)
    single_photon_loss: float = Field(default=0.0, ge=0)

    @classmethod
    def pair_from_config(cls) -> tuple["ResonatorSpec", "ResonatorSpec"]:
        storage, buffer = (cls(**resonator) for resonator in Config().get_resonators())

        return storage, buffer


class NewtonSettings(BaseModel):
    """
    Iteration budget and relative residual tolerance of the equilibrium Newton solver.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iterations: int = Field(default=100, ge=0)
    tolerance: float = Field(default=1e-12, gt=0)

    @classmethod
    def from_config(cls) -> "NewtonSettings":
        settings = Config().get_coupler_settings()

        return cls(
            max_iterations=settings["newton_max_iterations"],
            tolerance=settings["newton_tolerance"],
        )


class CouplerSpec(BaseModel):
    """
    Coupler geometry and static bias fluxes.
    The large arm carries critical current I0, the small one alpha * I0;
    for the BiSQUID the large arm is a symmetric sub-SQUID threaded by flux_prime.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    variant: CouplerVariant = CouplerVariant.ASYMMETRIC_SQUID
    critical_current: float = Field(gt=0)
    asymmetry: float = Field(ge=0)
    junction_capacitance: float = Field(default=0.0, ge=0)
    small_junction_capacitance: float = Field(default=0.0, ge=0)
    flux: float = 0.0
    flux_prime: float = 0.0

    @model_validator(mode="after")
    def check_flux_prime(self):
        if self.variant == CouplerVariant.ASYMMETRIC_SQUID and self.flux_prime != 0:
            raise ValueError("flux_prime must be 0 for an AsymmetricSquid coupler")

        return self

    @classmethod
    def from_config(cls, **overrides: Any) -> "CouplerSpec":
        return cls(**(Config().get_coupler_circuit() | overrides))

    @property
    def josephson_energy(self) -> float:
        return units.josephson_energy(self.critical_current)

    @property
    def total_capacitance(self) -> float:
        """
        Coupler self-capacitance C_c = C_alphaJJ + (1 + beta) C_JJ.
        """
        return (
            self.small_junction_capacitance
            + (1 + self.variant.get_beta()) * self.junction_capacitance
        )

    def with_fluxes(self, flux: float, flux_prime: float | None = None) -> "CouplerSpec":
        update: dict[str, float] = {"flux": flux}
        if flux_prime is not None:
            update["flux_prime"] = flux_prime

        return self.model_validate(self.model_dump() | update)


@dataclass(frozen=True)
class ResonatorDerived:
    """
    Derived energies (rad/s) and dimensionless zero-point magnitudes of one resonator.
    """

    capacitive_energy: float
    inductive_energy: float
    loaded_capacitance: float
    loaded_capacitive_energy: float
    renormalized_inductive_energy: float
    bare_frequency: float
    renormalized_frequency: float
    phase_zpf: float
    charge_zpf: float
    self_kerr: float
    cubic_strength: float
    sw_parameter: float
    single_photon_loss: float = 0.0

    def to_dict(self) -> dict[str, float]:
        return {
            "E_C_GHz": units.to_ghz(self.capacitive_energy),
            "E_L_GHz": units.to_ghz(self.inductive_energy),
            "E_C_loaded_GHz": units.to_ghz(self.loaded_capacitive_energy),
            "E_L_renormalized_GHz": units.to_ghz(self.renormalized_inductive_energy),
            "omega_osc_GHz": units.to_ghz(self.bare_frequency),
            "omega_GHz": units.to_ghz(self.renormalized_frequency),
            "phi_zpf": self.phase_zpf,
            "n_zpf": self.charge_zpf,
            "K_kHz": units.to_khz(self.self_kerr),
            "G3_MHz": units.to_mhz(self.cubic_strength),
            "Lambda": self.sw_parameter,
        }


@dataclass(frozen=True)
class CouplerDerived:
    josephson_energy: float
    effective_energy: float
    asymmetry_factor: float
    phase_shift: float
    phi1_min: float
    phi2_min: float
    delta: float
    taylor_coefficients: dict[int, float]
    total_capacitance: float
    capacitive_energy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "E_J_GHz": units.to_ghz(self.josephson_energy),
            "E_eff_GHz": units.to_ghz(self.effective_energy),
            "xi": self.asymmetry_factor,
            "theta": self.phase_shift,
            "phi1_min": self.phi1_min,
            "phi2_min": self.phi2_min,
            "delta": self.delta,
            "u": {str(k): u for k, u in self.taylor_coefficients.items()},
            "C_c_fF": self.total_capacitance * 1e15,
            "E_C_coupling_GHz": units.to_ghz(self.capacitive_energy),
        }


@dataclass(frozen=True)
class CouplingSet:
    """
    Couplings between the two resonators (rad/s).
    `inductive` maps (k - l, l) to g_{k-l,l}; g21 keeps its sign.
    """

    capacitive: float
    inductive: dict[tuple[int, int], float] = field(default_factory=dict)
    two_photon: float = 0.0
    linear: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "g_c_MHz": units.to_mhz(self.capacitive),
            "g21_MHz": units.to_mhz(self.two_photon),
            "abs_g21_MHz": units.to_mhz(abs(self.two_photon)),
            "g11_MHz": units.to_mhz(self.linear),
            "inductive_MHz": {
                f"{i},{j}": units.to_mhz(g) for (i, j), g in self.inductive.items()
            },
        }


@dataclass(frozen=True)
class OddParityPoint:
    flux: float
    flux_prime: float
    delta: float
    target: float
    effective_energy: float
    two_photon: float
    coupling_vanishes: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "phi_c": self.flux,
            "phi_c_prime": self.flux_prime,
            "delta": self.delta,
            "target": self.target,
            "E_eff_GHz": units.to_ghz(self.effective_energy),
            "g21_MHz": units.to_mhz(self.two_photon),
            "coupling_vanishes": self.coupling_vanishes,
        }


def _arm_energies(coupler: CouplerSpec) -> tuple[float, float, float]:
    """
    Josephson energies of the two arms and the effective half flux x = pi (Phi + beta Phi' / 2).
    """
    josephson = coupler.josephson_energy
    large_arm = josephson * math.cos(math.pi * coupler.flux_prime)
    small_arm = coupler.asymmetry * josephson
    half_flux = math.pi * (
        coupler.flux + coupler.variant.get_beta() * coupler.flux_prime / 2
    )

    return large_arm, small_arm, half_flux


def asymmetry_factor(coupler: CouplerSpec) -> float:
    """
    xi = (cos(pi Phi') - alpha) / (cos(pi Phi') + alpha), i.e. (1 - alpha) / (1 + alpha) for a plain SQUID.

    :param coupler: A CouplerSpec.
    :return: xi, or NaN when both arms cancel exactly.
    """
    large_arm, small_arm, _ = _arm_energies(coupler)
    if large_arm + small_arm == 0:
        return math.nan

    return (large_arm - small_arm) / (large_arm + small_arm)


def effective_josephson_energy(coupler: CouplerSpec) -> float:
    """
    Flux-dependent Josephson energy of the coupler,
    |E_a + E_b| sqrt(cos^2 x + xi^2 sin^2 x) evaluated as sqrt((E_a - E_b)^2 + 4 E_a E_b cos^2 x),
    which stays accurate where the arms cancel.

    :param coupler: A CouplerSpec.
    :return: E_JJ,eff / hbar in rad/s, never negative.
    """
    large_arm, small_arm, half_flux = _arm_energies(coupler)
    squared = (large_arm - small_arm) ** 2 + 4 * large_arm * small_arm * math.cos(half_flux) ** 2

    return math.sqrt(max(squared, 0.0))


def _continuous_arctan(xi: float, angle: float) -> float:
    """
    Branch of arctan(xi tan x) that is continuous in x and vanishes at x = 0.
    """
    if xi == 0:
        return 0.0
    magnitude = abs(xi)
    sine, cosine = math.sin(angle), math.cos(angle)
    branch = angle + math.atan2(
        (magnitude - 1) * sine * cosine, cosine**2 + magnitude * sine**2
    )

    return branch if xi > 0 else -branch


def phase_shift(coupler: CouplerSpec) -> float:
    """
    Phase shift theta entering the coupler potential -E_eff cos(phi1 - phi2 - theta).
    theta = x + arctan(xi tan x) on the branch continuous in the fluxes, plus pi when
    the arm energies sum to a negative value so that E_eff stays non-negative.

    :param coupler: A CouplerSpec.
    :return: theta in radians.
    """
    large_arm, small_arm, half_flux = _arm_energies(coupler)
    total = large_arm + small_arm
    if total == 0:
        return float(np.angle(small_arm + large_arm * np.exp(2j * half_flux)))

    xi = (large_arm - small_arm) / total
    theta = half_flux + _continuous_arctan(xi, half_flux)

    return theta + math.pi if total < 0 else theta


def coupler_potential(
    phi1: np.ndarray | float,
    phi2: np.ndarray | float,
    *,
    inductive_energy_1: float,
    inductive_energy_2: float,
    effective_energy: float,
    theta: float,
) -> np.ndarray | float:
    """
    Two-site potential U = E_L1 phi1^2 / 2 + E_L2 phi2^2 / 2 - E_eff cos(phi1 - phi2 - theta).
    """
    return (
        0.5 * inductive_energy_1 * np.square(phi1)
        + 0.5 * inductive_energy_2 * np.square(phi2)
        - effective_energy * np.cos(np.subtract(phi1, phi2) - theta)
    )


def solve_equilibrium_phases(
    inductive_energy_1: float,
    inductive_energy_2: float,
    effective_energy: float,
    theta: float,
    *,
    max_iterations: int = 100,
    tolerance: float = 1e-12,
) -> tuple[float, float]:
    """
    Stationary point of the two-site potential, i.e. the root of
    E_L1 phi1 + E_eff sin(d) = 0 and E_L2 phi2 - E_eff sin(d) = 0 with d = phi1 - phi2 - theta.
    Newton with the analytic Jacobian from (0, 0); steps are halved while they do not reduce the residual.

    :param inductive_energy_1: E_L1 (any unit shared by all energies).
    :param inductive_energy_2: E_L2.
    :param effective_energy: E_JJ,eff.
    :param theta: Phase shift in radians.
    :param max_iterations: Newton iteration budget.
    :param tolerance: Residual tolerance relative to E_L1.
    :return: (phi1_min, phi2_min).
    :raise PreconditionViolated: If E_JJ,eff >= min(E_L1, E_L2).
    :raise NoConvergence: If the residual does not drop below tolerance.
    """
    if effective_energy >= min(inductive_energy_1, inductive_energy_2):
        raise PreconditionViolated(
            "solve_equilibrium_phases", "E_JJ,eff < min(E_L1, E_L2)"
        )
    if effective_energy == 0:
        return 0.0, 0.0

    def residual(phases: np.ndarray) -> np.ndarray:
        sine = effective_energy * math.sin(phases[0] - phases[1] - theta)
        return np.array(
            [inductive_energy_1 * phases[0] + sine, inductive_energy_2 * phases[1] - sine]
        )

    phases = np.zeros(2)
    current = residual(phases)
    scale = inductive_energy_1
    for iteration in range(max_iterations):
        if np.max(np.abs(current)) / scale < tolerance:
            logger.debug("Equilibrium phases converged in %d Newton steps", iteration)
            return float(phases[0]), float(phases[1])

        cosine = effective_energy * math.cos(phases[0] - phases[1] - theta)
        jacobian = np.array(
            [
                [inductive_energy_1 + cosine, -cosine],
                [-cosine, inductive_energy_2 + cosine],
            ]
        )
        try:
            step = np.linalg.solve(jacobian, -current)
        except np.linalg.LinAlgError as error:
            raise NoConvergence(
                "Kirchhoff Newton solver", iteration, float(np.max(np.abs(current)) / scale)
            ) from error
        damping = 1.0
        candidate = phases + step
        candidate_residual = residual(candidate)
        while (
            np.linalg.norm(candidate_residual) >= np.linalg.norm(current)
            and damping > 1e-6
        ):
            damping /= 2
            candidate = phases + damping * step
            candidate_residual = residual(candidate)
        phases, current = candidate, candidate_residual

    final = float(np.max(np.abs(current)) / scale)
    if final < tolerance:
        return float(phases[0]), float(phases[1])

    raise NoConvergence("Kirchhoff Newton solver", max_iterations, final)


def taylor_coefficient(order: int, delta: float) -> float:
    """
    k-th derivative of cos at delta: (-1)^ceil(k/2) times cos(delta) for even k, sin(delta) for odd k.

    :param order: Expansion order k >= 0.
    :param delta: Equilibrium phase difference in radians.
    :return: u_k in [-1, 1].
    """
    sign = -1.0 if math.ceil(order / 2) % 2 else 1.0
    trig = math.cos(delta) if order % 2 == 0 else math.sin(delta)

    return sign * trig


def resonator_derived(
    spec: ResonatorSpec,
    *,
    loaded_capacitance: float,
    effective_energy: float,
    u2: float,
    u3: float,
    sw_parameter_warning: float = 0.1,
) -> ResonatorDerived:
    """
    Derived quantities of one resonator given the coupler loading.

    :param spec: The bare ResonatorSpec.
    :param loaded_capacitance: Node capacitance including the coupler branch (F).
    :param effective_energy: E_JJ,eff (rad/s).
    :param u2: Second-order Taylor coefficient.
    :param u3: Third-order Taylor coefficient.
    :param sw_parameter_warning: |Lambda| above which a warning is logged.
    :return: A ResonatorDerived.
    :raise PreconditionViolated: If the renormalized inductive energy is not positive.
    """
    capacitive = units.charging_energy(spec.capacitance)
    inductive = units.inductive_energy(spec.inductance)
    loaded_capacitive = units.charging_energy(loaded_capacitance)
    renormalized_inductive = inductive - effective_energy * u2
    if renormalized_inductive <= 0:
        raise PreconditionViolated("resonator_derived", "E_L - E_JJ,eff u2 > 0")

    bare_frequency = math.sqrt(8 * loaded_capacitive * renormalized_inductive)
    phase_zpf = (2 * loaded_capacitive / renormalized_inductive) ** 0.25
    charge_zpf = (renormalized_inductive / (32 * loaded_capacitive)) ** 0.25
    cubic = effective_energy * phase_zpf**3 * u3 / math.factorial(3)
    kerr = 30 * cubic**2 / bare_frequency
    frequency = bare_frequency - 2 * kerr
    sw_parameter = cubic / frequency
    if abs(sw_parameter) >= sw_parameter_warning:
        logger.warning(
            "Schrieffer-Wolff parameter |Lambda| = %.3f is not small", abs(sw_parameter)
        )

    return ResonatorDerived(
        capacitive_energy=capacitive,
        inductive_energy=inductive,
        loaded_capacitance=loaded_capacitance,
        loaded_capacitive_energy=loaded_capacitive,
        renormalized_inductive_energy=renormalized_inductive,
        bare_frequency=bare_frequency,
        renormalized_frequency=frequency,
        phase_zpf=phase_zpf,
        charge_zpf=charge_zpf,
        self_kerr=kerr,
        cubic_strength=cubic,
        sw_parameter=sw_parameter,
        single_photon_loss=spec.single_photon_loss,
    )


def equilibrium_delta(
    resonators: tuple[ResonatorSpec, ResonatorSpec],
    coupler: CouplerSpec,
    newton: NewtonSettings | None = None,
) -> tuple[float, float, float, float]:
    """
    Equilibrium of the coupler circuit.

    :return: (phi1_min, phi2_min, delta, theta).
    """
    newton = newton or NewtonSettings()
    theta = phase_shift(coupler)
    phi1, phi2 = solve_equilibrium_phases(
        units.inductive_energy(resonators[0].inductance),
        units.inductive_energy(resonators[1].inductance),
        effective_josephson_energy(coupler),
        theta,
        max_iterations=newton.max_iterations,
        tolerance=newton.tolerance,
    )

    return phi1, phi2, phi1 - phi2 - theta, theta


def coupling_set(
    resonators: tuple[ResonatorSpec, ResonatorSpec],
    coupler: CouplerSpec,
    k_max: int = 6,
    *,
    sw_parameter_warning: float = 0.1,
    newton: NewtonSettings | None = None,
) -> tuple[tuple[ResonatorDerived, ResonatorDerived], CouplerDerived, CouplingSet]:
    """
    Full derived chain: loaded capacitances, equilibrium, Taylor coefficients,
    renormalized resonators and all couplings up to order k_max.

    :param resonators: Storage (index 1) and buffer (index 2) resonators.
    :param coupler: A CouplerSpec at its static fluxes.
    :param k_max: Highest expansion order, at least 3.
    :param sw_parameter_warning: |Lambda| above which a warning is logged.
    :param newton: Equilibrium solver settings, NewtonSettings defaults when unset.
    :return: ((ResonatorDerived, ResonatorDerived), CouplerDerived, CouplingSet).
    :raise PreconditionViolated: If k_max < 3 or outside the single-minimum regime.
    :raise NoConvergence: If the equilibrium phases cannot be found.
    """
    if k_max < 3:
        raise PreconditionViolated("coupling_set", "k_max >= 3")

    storage, buffer = resonators
    coupler_capacitance = coupler.total_capacitance
    loaded_1 = units.series_loaded(storage.capacitance, buffer.capacitance, coupler_capacitance)
    loaded_2 = units.series_loaded(buffer.capacitance, storage.capacitance, coupler_capacitance)

    effective = effective_josephson_energy(coupler)
    phi1, phi2, delta, theta = equilibrium_delta(resonators, coupler, newton)
    coefficients = {k: taylor_coefficient(k, delta) for k in range(2, k_max + 1)}

    derived = tuple(
        resonator_derived(
            spec,
            loaded_capacitance=loaded,
            effective_energy=effective,
            u2=coefficients[2],
            u3=coefficients[3],
            sw_parameter_warning=sw_parameter_warning,
        )
        for spec, loaded in ((storage, loaded_1), (buffer, loaded_2))
    )
    zpf_1, zpf_2 = derived[0].phase_zpf, derived[1].phase_zpf

    inductive: dict[tuple[int, int], float] = {}
    for order in range(2, k_max + 1):
        for power_2 in range(1, order):
            power_1 = order - power_2
            inductive[(power_1, power_2)] = (
                (-1) ** (power_2 + 1)
                * effective
                * zpf_1**power_1
                * zpf_2**power_2
                * coefficients[order]
                / (math.factorial(power_1) * math.factorial(power_2))
            )

    capacitive_energy = units.coupling_charging_energy(
        storage.capacitance, buffer.capacitance, coupler_capacitance
    )
    couplings = CouplingSet(
        capacitive=capacitive_energy * derived[0].charge_zpf * derived[1].charge_zpf,
        inductive=inductive,
        two_photon=inductive[(2, 1)],
        linear=inductive[(1, 1)],
    )
    coupler_derived = CouplerDerived(
        josephson_energy=coupler.josephson_energy,
        effective_energy=effective,
        asymmetry_factor=asymmetry_factor(coupler),
        phase_shift=theta,
        phi1_min=phi1,
        phi2_min=phi2,
        delta=delta,
        taylor_coefficients=coefficients,
        total_capacitance=coupler_capacitance,
        capacitive_energy=capacitive_energy,
    )

    return (derived[0], derived[1]), coupler_derived, couplings


def _half_odd_index(delta: float) -> int:
    return math.floor(delta / math.pi - 0.5)


def find_odd_parity_flux(
    coupler: CouplerSpec,
    resonators: tuple[ResonatorSpec, ResonatorSpec],
    *,
    scan_points: int = 257,
    tolerance: float = 1e-10,
) -> OddParityPoint:
    """
    First flux Phi_c in [0, 1) at which delta = (n + 1/2) pi, the coupler's flux_prime held fixed.
    delta(Phi_c) is scanned for a crossing of a half-odd multiple of pi, then bisected.

    :param coupler: Coupler family; its `flux` is the free parameter.
    :param resonators: Storage and buffer resonators.
    :param scan_points: Number of scan points bracketing the root.
    :param tolerance: Required |delta - target|.
    :return: An OddParityPoint, flagged when the coupling vanishes there.
    :raise NoRoot: If delta never crosses a half-odd multiple of pi.
    """

    def delta_at(flux: float) -> float:
        return equilibrium_delta(resonators, coupler.with_fluxes(flux))[2]

    fluxes = np.linspace(0.0, 1.0, scan_points)
    deltas = [delta_at(flux) for flux in fluxes]
    for index in range(scan_points - 1):
        low, high = _half_odd_index(deltas[index]), _half_odd_index(deltas[index + 1])
        target = math.pi * (max(low, high) + 0.5)
        if math.isclose(deltas[index], target, rel_tol=0, abs_tol=tolerance):
            root = float(fluxes[index])
            break
        if low != high:
            root = optimize.bisect(
                lambda flux: delta_at(flux) - target,
                fluxes[index],
                fluxes[index + 1],
                xtol=1e-15,
                maxiter=200,
            )
            break
    else:
        raise NoRoot("delta - (n + 1/2) pi", (0.0, 1.0))

    point = coupler.with_fluxes(root)
    delta = delta_at(root)
    if abs(delta - target) >= tolerance:
        raise NoRoot("delta - (n + 1/2) pi within tolerance", (0.0, 1.0))

    effective = effective_josephson_energy(point)
    vanishes = effective <= 1e-12 * coupler.josephson_energy
    two_photon = 0.0 if vanishes else coupling_set(resonators, point)[2].two_photon
    if vanishes:
        logger.warning(
            "Odd-parity flux %.6f has vanishing Josephson coupling (alpha=%.3f)",
            root,
            coupler.asymmetry,
        )

    return OddParityPoint(
        flux=root,
        flux_prime=coupler.flux_prime,
        delta=delta,
        target=target,
        effective_energy=effective,
        two_photon=two_photon,
        coupling_vanishes=vanishes,
    )


def coupler_off_point(coupler: CouplerSpec, n: int = 0) -> tuple[float, float]:
    """
    Fluxes switching the BiSQUID inductive coupling off:
    Phi'_c = arccos(alpha) / pi and Phi_c = n + 1/2 - Phi'_c / 2.

    :param coupler: A BiSquid CouplerSpec.
    :param n: Flux branch index.
    :return: (Phi_c, Phi'_c) in units of Phi_0.
    :raise PreconditionViolated: If the coupler is not a BiSquid or alpha > 1.
    """
    if coupler.variant != CouplerVariant.BI_SQUID:
        raise PreconditionViolated("coupler_off_point", "a BiSquid coupler")
    if coupler.asymmetry > 1:
        raise PreconditionViolated("coupler_off_point", "alpha <= 1")

    flux_prime = math.acos(coupler.asymmetry) / math.pi
    flux = n + 0.5 - flux_prime / 2
    residual = effective_josephson_energy(coupler.with_fluxes(flux, flux_prime))
    if residual > 1e-9 * coupler.josephson_energy:
        logger.warning("E_eff at the coupler-off point is %.3e rad/s", residual)

    return flux, flux_prime


def flux_map(
    resonators: tuple[ResonatorSpec, ResonatorSpec],
    coupler: CouplerSpec,
    fluxes: np.ndarray,
    fluxes_prime: np.ndarray,
    k_max: int = 6,
    newton: NewtonSettings | None = None,
) -> pd.DataFrame:
    """
    Effective energy, |g21| and distance from odd parity |cos delta| over a flux grid,
    flux_prime slowest-varying. Cells outside the single-minimum regime hold NaN.

    :return: A pandas DataFrame with columns phi_c, phi_c_prime, E_eff_GHz, g21_MHz, parity_residual.
    """
    rows = []
    for flux_prime in fluxes_prime:
        for flux in fluxes:
            point = coupler.with_fluxes(float(flux), float(flux_prime))
            effective = effective_josephson_energy(point)
            try:
                _, derived, couplings = coupling_set(resonators, point, k_max, newton=newton)
                g21, residual = abs(couplings.two_photon), abs(math.cos(derived.delta))
            except PreconditionViolated:
                g21, residual = math.nan, math.nan
            rows.append(
                {
                    Label.PHI_C.value: float(flux),
                    Label.PHI_C_PRIME.value: float(flux_prime),
                    Label.E_EFF_GHZ.value: units.to_ghz(effective),
                    Label.G21_MHZ.value: units.to_mhz(g21),
                    Label.PARITY_RESIDUAL.value: residual,
                }
            )

    return pd.DataFrame(rows, columns=FLUX_MAP_COLUMNS)


def odd_parity_locus(
    resonators: tuple[ResonatorSpec, ResonatorSpec],
    coupler: CouplerSpec,
    asymmetries: list[float],
) -> list[OddParityPoint]:
    """
    Odd-parity point and two-photon coupling for each asymmetry, other coupler settings fixed.
    """
    return [
        find_odd_parity_flux(
            coupler.model_validate(coupler.model_dump() | {"asymmetry": alpha}),
            resonators,
        )
        for alpha in asymmetries
    ]

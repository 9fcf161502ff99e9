"""
Provides the flux-biased rf-SQUID photomultiplier (JPM): its potential, the double-well
eigenproblem on a phase grid, well classification, charge matrix elements,
relaxation-rate ratios, drive and resonator-coupling strengths and flux-noise dephasing.

Energies are angular frequencies (rad/s); eigenvalues of the reduced Schrodinger
equation [-1/2 d^2/dphi^2 + U / 8E_C] psi = eps psi are kept in units of 8E_C.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import constants, optimize, sparse
from scipy.sparse import linalg as sparse_linalg

from back.detector.models.coupled_resonators import ResonatorDerived
from back.detector.utils import JpmLevel, Label, WellLabel
from back.detector.utils import finite_differences as fd
from back.detector.utils import units
from back.detector.utils.custom_exceptions import (
    BoundaryLeak,
    DegenerateAnchor,
    FixedPointDiverged,
    NoBarrier,
    NoConvergence,
    NoRoot,
    NotConverged,
    PreconditionViolated,
)
from config import Config

logger = logging.getLogger(__name__)

# Energies (units of 8E_C) and phases closer than this to the barrier top are resolved deterministically.
TIE_TOLERANCE = 1e-6


class JpmSpec(BaseModel):
    """
    JPM circuit: junction critical current (A), loop inductance (H), shunt plus junction
    capacitance (F), coupling capacitances to the buffer resonator, the drive line and the
    waveguide (F), bias flux (Phi_0), waveguide impedance (Ohm) and drive voltage (V).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    critical_current: float = Field(ge=0)
    loop_inductance: float = Field(gt=0)
    capacitance: float = Field(gt=0)
    coupling_capacitance: float = Field(default=0.0, ge=0)
    drive_capacitance: float = Field(default=0.0, ge=0)
    waveguide_capacitance: float = Field(default=0.0, ge=0)
    bias_flux: float = 0.0
    waveguide_impedance: float = Field(default=50.0, gt=0)
    drive_voltage: float = Field(default=0.0, ge=0)

    @classmethod
    def from_config(cls, **overrides: float) -> "JpmSpec":
        return cls(**(Config().get_jpm_circuit() | overrides))

    @property
    def josephson_energy(self) -> float:
        return units.josephson_energy(self.critical_current)

    @property
    def inductive_energy(self) -> float:
        return units.inductive_energy(self.loop_inductance)

    @property
    def capacitive_energy(self) -> float:
        return units.charging_energy(self.capacitance)

    @property
    def loaded_capacitance(self) -> float:
        return (
            self.capacitance
            + self.coupling_capacitance
            + self.drive_capacitance
            + self.waveguide_capacitance
        )

    @property
    def loaded_capacitive_energy(self) -> float:
        return units.charging_energy(self.loaded_capacitance)

    @property
    def external_phase(self) -> float:
        return 2 * math.pi * self.bias_flux

    @property
    def impedance(self) -> float:
        """
        Characteristic impedance sqrt(L_S / C_d~) of the JPM.
        """
        return math.sqrt(self.loop_inductance / self.loaded_capacitance)

    def with_bias(self, bias_flux: float) -> "JpmSpec":
        return self.model_validate(self.model_dump() | {"bias_flux": bias_flux})

    def with_coupling_capacitance(self, capacitance: float) -> "JpmSpec":
        return self.model_validate(self.model_dump() | {"coupling_capacitance": capacitance})


class SpectrumSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid_points: int = Field(default=8001, ge=1001)
    phi_half_width: float = Field(default=6.0, gt=0)
    stencil_order: int = 8
    superbarrier_states: int = Field(default=2, ge=0)
    single_well_states: int = Field(default=20, ge=1)
    boundary_threshold: float = Field(default=1e-12, gt=0)
    convergence_tolerance: float = Field(default=1e-8, gt=0)
    verify_convergence: bool = False
    flux_step: float = Field(default=1e-4, gt=0)

    @classmethod
    def from_config(cls, **overrides: Any) -> "SpectrumSettings":
        return cls(**(Config().get_grid_settings() | overrides))

    def solver_kwargs(self, spec: JpmSpec) -> dict[str, Any]:
        """
        Keyword arguments of solve_spectrum for a grid centred on the external phase.
        """
        center = spec.external_phase

        return {
            "grid_points": self.grid_points,
            "phi_range": (center - self.phi_half_width, center + self.phi_half_width),
            "stencil_order": self.stencil_order,
            "superbarrier_states": self.superbarrier_states,
            "single_well_states": self.single_well_states,
            "boundary_threshold": self.boundary_threshold,
            "verify_convergence": self.verify_convergence,
            "convergence_tolerance": self.convergence_tolerance,
        }


class DephasingSettings(BaseModel):
    """
    Flux-noise amplitude A_Phi (Phi_0), low-frequency cutoff (Hz) and fixed-point iteration settings.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    flux_noise_amplitude: float = Field(default=1e-6, ge=0)
    cutoff_hz: float = Field(default=1.0, gt=0)
    zeta_seed: float = Field(default=10.0, gt=0)
    zeta_tolerance: float = Field(default=1e-6, gt=0)
    max_iterations: int = Field(default=200, ge=1)

    @classmethod
    def from_config(cls, **overrides: Any) -> "DephasingSettings":
        return cls(**(Config().get_dephasing_settings() | overrides))

    def solver_kwargs(self) -> dict[str, Any]:
        return {
            "flux_noise_amplitude": self.flux_noise_amplitude,
            "cutoff": units.from_hz(self.cutoff_hz),
            "zeta_seed": self.zeta_seed,
            "zeta_tolerance": self.zeta_tolerance,
            "max_iterations": self.max_iterations,
        }


@dataclass(frozen=True)
class PotentialLandscape:
    """
    Stationary points of the JPM potential on a phase interval, as (phi, U) pairs with U in rad/s.
    """

    minima: tuple[tuple[float, float], ...]
    maxima: tuple[tuple[float, float], ...]
    deep_minimum: tuple[float, float]
    shallow_minimum: tuple[float, float] | None = None
    barrier_top: tuple[float, float] | None = None

    @property
    def is_double_well(self) -> bool:
        return self.barrier_top is not None

    @property
    def shallow_side(self) -> WellLabel:
        if self.shallow_minimum is None or self.barrier_top is None:
            raise NoBarrier(math.nan)
        if self.shallow_minimum[0] < self.barrier_top[0]:
            return WellLabel.LEFT_WELL

        return WellLabel.RIGHT_WELL

    @property
    def deep_side(self) -> WellLabel:
        if self.shallow_side == WellLabel.LEFT_WELL:
            return WellLabel.RIGHT_WELL

        return WellLabel.LEFT_WELL

    def to_dict(self) -> dict[str, Any]:
        def describe(point: tuple[float, float] | None) -> dict[str, float] | None:
            if point is None:
                return None
            return {"phi": point[0], "U_GHz": units.to_ghz(point[1])}

        return {
            "well_count": len(self.minima),
            "deep_minimum": describe(self.deep_minimum),
            "shallow_minimum": describe(self.shallow_minimum),
            "barrier_top": describe(self.barrier_top),
        }


@dataclass(frozen=True)
class JpmSpectrum:
    """
    Retained eigenpairs of the JPM on a uniform phase grid.
    Wavefunctions are real, columns normalized as sum(psi^2) * spacing = 1.
    """

    spec: JpmSpec
    grid: np.ndarray
    eigenvalues: np.ndarray
    energy_scale: float
    wavefunctions: np.ndarray
    stencil_order: int
    landscape: PotentialLandscape
    labels: tuple[WellLabel, ...] | None = None
    role_map: dict[JpmLevel, int] | None = None

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def energies(self) -> np.ndarray:
        return self.eigenvalues * self.energy_scale

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def mean_phase(self) -> np.ndarray:
        return np.sum(self.wavefunctions**2 * self.grid[:, None], axis=0) * self.spacing

    def index(self, level: JpmLevel) -> int:
        if self.role_map is None:
            raise NoBarrier(self.spec.bias_flux)

        return self.role_map[level]

    def level_number(self, level: JpmLevel) -> int:
        """
        Position of a role in the spectrum counted from 1 for the ground state.
        """
        return self.index(level) + 1

    def transition_frequency(self, upper: JpmLevel | int, lower: JpmLevel | int) -> float:
        """
        omega_{upper, lower} = (E_upper - E_lower) / hbar in rad/s.
        """
        upper_index = self.index(upper) if isinstance(upper, JpmLevel) else upper
        lower_index = self.index(lower) if isinstance(lower, JpmLevel) else lower

        return float(self.energies[upper_index] - self.energies[lower_index])

    def label_counts(self) -> dict[WellLabel, int]:
        labels = self.labels or ()

        return {label: labels.count(label) for label in WellLabel}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                Label.LEVEL.value: np.arange(1, self.size + 1),
                Label.ENERGY_GHZ.value: self.energies / (2 * np.pi) / 1e9,
                Label.WELL.value: [label.value for label in self.labels]
                if self.labels
                else [None] * self.size,
                Label.MEAN_PHI.value: self.mean_phase(),
            }
        )

    def wavefunction_samples(self, levels: list[int], *, stride: int = 10) -> pd.DataFrame:
        """
        Wavefunctions of some levels (0-based indices) sampled every `stride` grid points.
        """
        samples = {Label.PHI.value: self.grid[::stride]}
        for level in levels:
            samples[f"psi_{level + 1}"] = self.wavefunctions[::stride, level]

        return pd.DataFrame(samples)


@dataclass(frozen=True)
class ChargeMatrix:
    """
    Elements <lambda|n|lambda'> of the reduced charge operator n = -i d/dphi over a window of levels.
    """

    elements: np.ndarray
    levels: tuple[int, ...]
    asymmetry: float

    def element(self, row: int, column: int) -> complex:
        position = {level: index for index, level in enumerate(self.levels)}

        return complex(self.elements[position[row], position[column]])

    def magnitudes(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            np.abs(self.elements),
            index=[level + 1 for level in self.levels],
            columns=[level + 1 for level in self.levels],
        )
        frame.index.name = Label.LEVEL.value

        return frame


@dataclass(frozen=True)
class RateTable:
    """
    Relaxation ratios of the g, e, f levels.
    `internal` maps (upper, lower) to Gamma_{upper lower} / Gamma_eg; `sink` maps a level to
    its aggregate deep-well rate over Gamma_eg. Engineered ratios over kappa_eg are identical.
    """

    internal: dict[tuple[JpmLevel, JpmLevel], float]
    sink: dict[JpmLevel, float]

    @property
    def engineered(self) -> dict[tuple[JpmLevel, JpmLevel], float]:
        return dict(self.internal)

    @property
    def engineered_sink(self) -> dict[JpmLevel, float]:
        return dict(self.sink)

    def absolute(self, gamma_eg: float, kappa_eg: float) -> dict[str, float]:
        """
        Absolute rates (rad/s) once the internal and engineered g-e anchors are given.
        """
        fe = self.internal[(JpmLevel.F, JpmLevel.E)]
        fg = self.internal[(JpmLevel.F, JpmLevel.G)]

        return {
            "Gamma_fe": fe * gamma_eg,
            "Gamma_fg": fg * gamma_eg,
            "kappa_fe": fe * kappa_eg,
            "kappa_fg": fg * kappa_eg,
            **{
                f"gamma_{level.value}": ratio * (gamma_eg + kappa_eg)
                for level, ratio in self.sink.items()
            },
        }

    def to_dict(self) -> dict[str, float]:
        return {
            "Gamma_fg/Gamma_eg": self.internal[(JpmLevel.F, JpmLevel.G)],
            "Gamma_fe/Gamma_eg": self.internal[(JpmLevel.F, JpmLevel.E)],
            **{
                f"Gamma_{level.value}_sink/Gamma_eg": ratio
                for level, ratio in self.sink.items()
            },
        }


@dataclass(frozen=True)
class DriveCoupling:
    """
    Drive amplitudes Omega_{ll'} and resonator couplings G_{ll'} (rad/s) over the charge window,
    with the shorthand Omega = |Omega_ef| / 2 and G = |G_ge|.
    """

    drive: np.ndarray
    coupling: np.ndarray
    drive_strength: float
    coupling_strength: float
    coupling_energy: float

    def to_dict(self) -> dict[str, float]:
        return {
            "Omega_MHz": units.to_mhz(self.drive_strength),
            "G_MHz": units.to_mhz(self.coupling_strength),
            "E_g_MHz": units.to_mhz(self.coupling_energy),
        }


@dataclass(frozen=True)
class DephasingRates:
    dephasing: dict[JpmLevel, float]
    zeta: dict[JpmLevel, float]
    slopes: dict[JpmLevel, float]
    flux_noise_amplitude: float
    cutoff: float

    def to_dict(self) -> dict[str, float]:
        return {
            "A_phi": self.flux_noise_amplitude,
            "cutoff_Hz": self.cutoff / (2 * np.pi),
            **{f"Gamma_phi_{level.value}_MHz": units.to_mhz(rate) for level, rate in self.dephasing.items()},
            **{f"zeta_{level.value}": zeta for level, zeta in self.zeta.items()},
            **{
                f"d_omega_{level.value}g_dPhi_GHz": units.to_ghz(slope)
                for level, slope in self.slopes.items()
            },
        }


def jpm_potential(phi: np.ndarray | float, spec: JpmSpec) -> np.ndarray | float:
    """
    U = E_L (phi - 2 pi Phi_b)^2 / 2 - E_J cos(phi).

    :param phi: Phase(s) in radians.
    :param spec: A JpmSpec.
    :return: U / hbar in rad/s.
    """
    return 0.5 * spec.inductive_energy * np.square(
        np.subtract(phi, spec.external_phase)
    ) - spec.josephson_energy * np.cos(phi)


def _potential_gradient(phi: np.ndarray | float, spec: JpmSpec) -> np.ndarray | float:
    return spec.inductive_energy * np.subtract(
        phi, spec.external_phase
    ) + spec.josephson_energy * np.sin(phi)


def potential_landscape(spec: JpmSpec, phi: np.ndarray) -> PotentialLandscape:
    """
    Locate the minima and maxima of the potential on a grid and refine them by root-finding
    on the gradient. The deep well is the lowest minimum (the one at larger phi on an exact tie),
    the shallow well the lowest of the others, the barrier the highest maximum between them.

    :param spec: A JpmSpec.
    :param phi: Increasing phase grid.
    :return: A PotentialLandscape.
    """
    gradient = _potential_gradient(phi, spec)
    crossings = np.nonzero(np.diff(np.signbit(gradient)))[0]
    minima, maxima = [], []
    for index in crossings:
        root = optimize.brentq(
            lambda x: _potential_gradient(x, spec), phi[index], phi[index + 1], xtol=1e-14
        )
        point = (float(root), float(jpm_potential(root, spec)))
        (minima if gradient[index] < 0 else maxima).append(point)

    if not minima:
        lowest = int(np.argmin(jpm_potential(phi, spec)))
        minima = [(float(phi[lowest]), float(jpm_potential(phi[lowest], spec)))]

    tie = 1e-9 * (spec.josephson_energy + spec.inductive_energy)
    lowest_value = min(value for _, value in minima)
    deep = max((point for point in minima if point[1] <= lowest_value + tie), key=lambda p: p[0])
    others = [point for point in minima if point != deep]
    if not others:
        return PotentialLandscape(tuple(minima), tuple(maxima), deep)

    shallow = min(others, key=lambda p: (p[1], abs(p[0] - deep[0])))
    low, high = sorted((shallow[0], deep[0]))
    between = [point for point in maxima if low < point[0] < high]
    top = max(between, key=lambda p: p[1])

    return PotentialLandscape(tuple(minima), tuple(maxima), deep, shallow, top)


def potential_profile(spec: JpmSpec, phi: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(
        {
            Label.PHI.value: phi,
            Label.POTENTIAL_GHZ.value: jpm_potential(phi, spec) / (2 * np.pi) / 1e9,
        }
    )


def _wkb_count(reduced_potential: np.ndarray, ceiling: float, spacing: float) -> float:
    momentum = np.sqrt(2 * np.clip(ceiling - reduced_potential, 0.0, None))

    return float(np.sum(momentum) * spacing / np.pi + 0.5)


def _sub_barrier(eigenvalues: np.ndarray, ceiling: float) -> np.ndarray:
    return eigenvalues < ceiling - TIE_TOLERANCE


def solve_spectrum(
    spec: JpmSpec,
    grid_points: int = 8001,
    phi_range: tuple[float, float] | None = None,
    *,
    stencil_order: int = 8,
    superbarrier_states: int = 2,
    single_well_states: int = 20,
    boundary_threshold: float = 1e-12,
    verify_convergence: bool = False,
    convergence_tolerance: float = 1e-8,
) -> JpmSpectrum:
    """
    Eigenpairs of the central-difference discretization of -1/2 d^2/dphi^2 + U / 8E_C~ with
    Dirichlet boundaries, E_C~ being the loaded charging energy. A double well keeps all
    sub-barrier states plus `superbarrier_states` above the barrier; a single well keeps
    the lowest `single_well_states`.

    :param spec: A JpmSpec.
    :param grid_points: Number of grid points (at least 1001).
    :param phi_range: Phase interval, defaults to 2 pi Phi_b -/+ 6.
    :param stencil_order: Accuracy order of the central stencil.
    :param superbarrier_states: Number of states kept above the barrier top.
    :param single_well_states: Number of states kept when there is no barrier.
    :param boundary_threshold: Largest |psi|^2 allowed at either grid end.
    :param verify_convergence: Whether to compare against a grid of doubled resolution.
    :param convergence_tolerance: Largest relative eigenvalue change allowed by that comparison.
    :return: A JpmSpectrum, labelled and role-mapped when the potential is double-welled.
    :raise PreconditionViolated: If grid_points < 1001.
    :raise BoundaryLeak: If a retained wavefunction reaches the grid ends.
    :raise NotConverged: If the doubled grid moves eigenvalues beyond tolerance.
    :raise NoConvergence: If the eigensolver fails.
    """
    if grid_points < 1001:
        raise PreconditionViolated("solve_spectrum", "grid_points >= 1001")
    if phi_range is None:
        phi_range = (spec.external_phase - 6.0, spec.external_phase + 6.0)

    phi = np.linspace(phi_range[0], phi_range[1], grid_points)
    spacing = float(phi[1] - phi[0])
    energy_scale = 8 * spec.loaded_capacitive_energy
    reduced = jpm_potential(phi, spec) / energy_scale
    hamiltonian = (
        -0.5 * fd.second_derivative(grid_points, spacing, order=stencil_order)
        + sparse.diags(reduced)
    ).tocsc()

    landscape = potential_landscape(spec, phi)
    if landscape.is_double_well:
        ceiling = landscape.barrier_top[1] / energy_scale
        requested = (
            math.ceil(1.05 * _wkb_count(reduced, ceiling, spacing)) + superbarrier_states + 10
        )
    else:
        ceiling = math.inf
        requested = single_well_states
    requested = min(requested, grid_points - 2)

    shift = float(reduced.min()) - 1.0
    while True:
        try:
            eigenvalues, eigenvectors = sparse_linalg.eigsh(
                hamiltonian, k=requested, sigma=shift, which="LM"
            )
        except sparse_linalg.ArpackNoConvergence as error:
            raise NoConvergence("shift-invert eigensolver", 10 * grid_points, math.nan) from error
        except RuntimeError as error:
            raise NoConvergence("shift-invert eigensolver", 0, math.nan) from error
        order = np.argsort(eigenvalues)
        eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
        above = np.count_nonzero(~_sub_barrier(eigenvalues, ceiling))
        if not landscape.is_double_well or above >= superbarrier_states:
            break
        if requested >= grid_points - 2:
            break
        requested = min(2 * requested, grid_points - 2)
        logger.debug("Widening eigensolver request to %d states", requested)

    if landscape.is_double_well:
        kept = int(np.count_nonzero(_sub_barrier(eigenvalues, ceiling))) + superbarrier_states
    else:
        kept = single_well_states
    eigenvalues, eigenvectors = eigenvalues[:kept], eigenvectors[:, :kept]

    eigenvectors = eigenvectors / np.sqrt(np.sum(eigenvectors**2, axis=0) * spacing)
    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    eigenvectors = eigenvectors * np.sign(eigenvectors[pivots, np.arange(kept)])

    boundary_density = np.maximum(eigenvectors[0] ** 2, eigenvectors[-1] ** 2)
    worst = int(np.argmax(boundary_density))
    if boundary_density[worst] > boundary_threshold:
        raise BoundaryLeak(worst + 1, float(boundary_density[worst]), phi_range)

    spectrum = JpmSpectrum(
        spec=spec,
        grid=phi,
        eigenvalues=eigenvalues,
        energy_scale=energy_scale,
        wavefunctions=eigenvectors,
        stencil_order=stencil_order,
        landscape=landscape,
    )
    if landscape.is_double_well:
        labels = tuple(classify_states(spectrum, spec))
        spectrum = dataclasses.replace(
            spectrum, labels=labels, role_map=_role_map(labels, landscape)
        )
    logger.info(
        "Solved JPM spectrum at Phi_b=%.4f: %d states kept on %d points",
        spec.bias_flux,
        kept,
        grid_points,
    )

    if verify_convergence:
        refined = solve_spectrum(
            spec,
            2 * grid_points - 1,
            phi_range,
            stencil_order=stencil_order,
            superbarrier_states=superbarrier_states,
            single_well_states=single_well_states,
            boundary_threshold=boundary_threshold,
        )
        common = min(spectrum.size, refined.size)
        change = np.abs(refined.eigenvalues[:common] - eigenvalues[:common]) / np.maximum(
            np.abs(eigenvalues[:common]), 1.0
        )
        if refined.size != spectrum.size or float(change.max()) > convergence_tolerance:
            raise NotConverged(grid_points, float(change.max()), convergence_tolerance)

    return spectrum


def classify_states(spectrum: JpmSpectrum, spec: JpmSpec) -> list[WellLabel]:
    """
    Label each state: above the barrier top it is Superbarrier; below the shallow-well bottom it
    belongs to the deep well; otherwise the side of the barrier holding its mean phase decides.
    Ties within TIE_TOLERANCE go to Superbarrier for energies and to the deep side for phases.

    :param spectrum: A JpmSpectrum.
    :param spec: The JpmSpec it was solved for.
    :return: One WellLabel per retained state.
    :raise NoBarrier: If the potential is single-welled.
    """
    landscape = spectrum.landscape or potential_landscape(spec, spectrum.grid)
    if not landscape.is_double_well:
        raise NoBarrier(spec.bias_flux)

    top_phase, top_energy = landscape.barrier_top
    ceiling = top_energy / spectrum.energy_scale
    floor = landscape.shallow_minimum[1] / spectrum.energy_scale
    shallow, deep = landscape.shallow_side, landscape.deep_side

    labels = []
    for eigenvalue, mean in zip(spectrum.eigenvalues, spectrum.mean_phase()):
        if eigenvalue >= ceiling - TIE_TOLERANCE:
            labels.append(WellLabel.SUPERBARRIER)
        elif eigenvalue < floor:
            labels.append(deep)
        elif shallow == WellLabel.LEFT_WELL:
            labels.append(shallow if mean < top_phase - TIE_TOLERANCE else deep)
        else:
            labels.append(shallow if mean > top_phase + TIE_TOLERANCE else deep)

    return labels


def _role_map(
    labels: tuple[WellLabel, ...], landscape: PotentialLandscape
) -> dict[JpmLevel, int] | None:
    shallow = [index for index, label in enumerate(labels) if label == landscape.shallow_side]
    deep = [index for index, label in enumerate(labels) if label == landscape.deep_side]
    if len(shallow) < 2 or not deep:
        logger.warning(
            "Cannot assign g, e, f roles: %d shallow-well and %d deep-well states",
            len(shallow),
            len(deep),
        )
        return None

    return {JpmLevel.G: shallow[0], JpmLevel.E: shallow[1], JpmLevel.F: deep[-1]}


def charge_matrix(
    spectrum: JpmSpectrum, window: tuple[int, int] | None = None
) -> ChargeMatrix:
    """
    <lambda|-i d/dphi|lambda'> by quadrature with the spectrum's central stencil.
    The raw matrix is made Hermitian by averaging with its adjoint; the removed asymmetry is reported.

    :param spectrum: A JpmSpectrum.
    :param window: Half-open range of 0-based levels, all retained levels by default.
    :return: A ChargeMatrix.
    :raise PreconditionViolated: If the window exceeds the retained levels.
    """
    start, stop = window if window is not None else (0, spectrum.size)
    if not 0 <= start < stop <= spectrum.size:
        raise PreconditionViolated("charge_matrix", f"window within [0, {spectrum.size})")

    states = spectrum.wavefunctions[:, start:stop]
    derivative = fd.first_derivative(
        len(spectrum.grid), spectrum.spacing, order=spectrum.stencil_order
    )
    raw = -1j * (states.T @ (derivative @ states)) * spectrum.spacing
    asymmetry = float(np.max(np.abs(raw - raw.conj().T)))
    if asymmetry > 1e-6:
        logger.warning("Charge matrix asymmetry %.3e before symmetrization", asymmetry)

    return ChargeMatrix(
        elements=(raw + raw.conj().T) / 2,
        levels=tuple(range(start, stop)),
        asymmetry=asymmetry,
    )


def rate_table(charge: ChargeMatrix, spectrum: JpmSpectrum) -> RateTable:
    """
    Ohmic-bath ratios Gamma_{ll'} / Gamma_eg = (omega_{ll'} / omega_eg) |m_{ll'} / m_ge|^2,
    with aggregate sink rates summed over the deep-well states lying below each level.

    :param charge: A ChargeMatrix covering g, e, f and the deep-well states below them.
    :param spectrum: The role-mapped JpmSpectrum.
    :return: A RateTable.
    :raise NoBarrier: If the spectrum has no g, e, f roles.
    :raise DegenerateAnchor: If |m_ge| vanishes.
    :raise PreconditionViolated: If a deep-well state below g, e or f lies outside the charge window.
    """
    if spectrum.role_map is None or spectrum.labels is None:
        raise NoBarrier(spectrum.spec.bias_flux)

    ground, excited = spectrum.index(JpmLevel.G), spectrum.index(JpmLevel.E)
    anchor = abs(charge.element(excited, ground))
    if anchor < 1e-12:
        raise DegenerateAnchor(anchor)
    anchor_frequency = spectrum.transition_frequency(excited, ground)

    def ratio(upper: int, lower: int) -> float:
        frequency = spectrum.transition_frequency(upper, lower)
        return frequency / anchor_frequency * abs(charge.element(upper, lower)) ** 2 / anchor**2

    internal = {
        (JpmLevel.E, JpmLevel.G): 1.0,
        (JpmLevel.F, JpmLevel.G): ratio(spectrum.index(JpmLevel.F), ground),
        (JpmLevel.F, JpmLevel.E): ratio(spectrum.index(JpmLevel.F), excited),
    }
    deep_side = spectrum.landscape.deep_side
    energies = spectrum.energies
    covered = set(charge.levels)
    sink = {}
    for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F):
        upper = spectrum.index(level)
        below = [
            lower
            for lower, label in enumerate(spectrum.labels)
            if label == deep_side and energies[lower] < energies[upper]
        ]
        if missing := [lower for lower in below if lower not in covered]:
            raise PreconditionViolated(
                "rate_table",
                f"charge matrix covering the {len(missing)} deep-well states below {level.value}",
            )
        sink[level] = sum(ratio(upper, lower) for lower in below)

    return RateTable(internal=internal, sink=sink)


def _coupling_energy(spec: JpmSpec, buffer: ResonatorDerived) -> float:
    """
    E_g / hbar = 4e^2 C_G / (C_2' C_d~) / hbar with C_2' = C_2~ + C_G.
    """
    buffer_capacitance = buffer.loaded_capacitance + spec.coupling_capacitance

    return (
        4
        * constants.e**2
        * spec.coupling_capacitance
        / (buffer_capacitance * spec.loaded_capacitance)
        / constants.hbar
    )


def drive_and_coupling(
    spec: JpmSpec, charge: ChargeMatrix, spectrum: JpmSpectrum, buffer: ResonatorDerived
) -> DriveCoupling:
    """
    Omega_{ll'} = 2 pi m_{ll'} (C_x / C_d~)(V_dr / Phi_0) and G_{ll'} = -i n_zpf,2 m_{ll'} E_g / hbar.

    :param spec: A JpmSpec with drive voltage and coupling capacitances.
    :param charge: A ChargeMatrix covering g, e, f.
    :param spectrum: The role-mapped JpmSpectrum.
    :param buffer: Derived quantities of the buffer resonator.
    :return: A DriveCoupling with Omega = |Omega_ef| / 2 and G = |G_ge|.
    """
    drive = (
        2
        * np.pi
        * charge.elements
        * (spec.drive_capacitance / spec.loaded_capacitance)
        * (spec.drive_voltage / units.FLUX_QUANTUM)
    )
    coupling_energy = _coupling_energy(spec, buffer)
    coupling = -1j * buffer.charge_zpf * charge.elements * coupling_energy
    position = {level: index for index, level in enumerate(charge.levels)}
    ground, excited, upper = (
        position[spectrum.index(level)] for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F)
    )

    return DriveCoupling(
        drive=drive,
        coupling=coupling,
        drive_strength=float(abs(drive[upper, excited]) / 2),
        coupling_strength=float(abs(coupling[ground, excited])),
        coupling_energy=coupling_energy,
    )


def solve_coupling_capacitance(
    spec: JpmSpec,
    charge: ChargeMatrix,
    spectrum: JpmSpectrum,
    buffer: ResonatorDerived,
    target: float,
) -> float:
    """
    Coupling capacitance C_G realizing G = |G_ge| = target, the spectrum held fixed.

    :param target: Desired G in rad/s.
    :return: C_G in farads.
    :raise NoRoot: If the target is not reachable for C_G in [0, C_d].
    """

    def mismatch(capacitance: float) -> float:
        candidate = spec.with_coupling_capacitance(capacitance)
        return drive_and_coupling(candidate, charge, spectrum, buffer).coupling_strength - target

    upper = spec.capacitance
    if mismatch(0.0) * mismatch(upper) > 0:
        raise NoRoot("|G_ge| - target over C_G", (0.0, upper))

    return float(optimize.brentq(mismatch, 0.0, upper, xtol=1e-22))


def drive_amplitude_for(charge: ChargeMatrix, spectrum: JpmSpectrum, target: float) -> float:
    """
    Effective drive voltage V_dr C_x / C_d~ (V) realizing Omega = |Omega_ef| / 2 = target.

    :param target: Desired Omega in rad/s.
    :return: V_dr C_x / C_d~ in volts.
    """
    element = abs(charge.element(spectrum.index(JpmLevel.F), spectrum.index(JpmLevel.E)))
    if element < 1e-12:
        raise DegenerateAnchor(element)

    return 2 * target * units.FLUX_QUANTUM / (2 * np.pi * element)


def waveguide_decay_rate(
    spec: JpmSpec, charge: ChargeMatrix, spectrum: JpmSpectrum, upper: int, lower: int
) -> float:
    """
    Engineered decay rate kappa = 2 pi |W(omega)|^2 into the waveguide, with
    W(nu) = |m| sqrt(Z_w / Z_d) (C_kappa / C_d~) sqrt(nu / 2 pi).

    :param upper: 0-based index of the upper level.
    :param lower: 0-based index of the lower level.
    :return: kappa in rad/s.
    """
    frequency = spectrum.transition_frequency(upper, lower)
    element = abs(charge.element(upper, lower))

    return (
        frequency
        * element**2
        * (spec.waveguide_impedance / spec.impedance)
        * (spec.waveguide_capacitance / spec.loaded_capacitance) ** 2
    )


def rwa_validity(
    charge: ChargeMatrix,
    spectrum: JpmSpectrum,
    *,
    two_photon: float,
    coupling_strength: float,
    drive_strength: float,
    omega_1: float,
    omega_2: float,
    threshold: float = 0.1,
) -> dict[str, dict[str, float | bool]]:
    """
    Ratios that must stay small for the rotating-wave reduction to hold.

    :return: A dictionary name -> {'ratio', 'valid'}.
    """
    ground, excited, upper = (
        spectrum.index(level) for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F)
    )
    omega_ge = spectrum.transition_frequency(excited, ground)
    omega_ef = spectrum.transition_frequency(upper, excited)
    detuning = abs(omega_ge - omega_ef)
    m_ge = abs(charge.element(excited, ground))
    m_ef = abs(charge.element(upper, excited))
    ratios = {
        "g21/omega_1": abs(two_photon) / omega_1,
        "g21/omega_2": abs(two_photon) / omega_2,
        "G/omega_2": coupling_strength / omega_2,
        "G/omega_ge": coupling_strength / omega_ge,
        "Omega_eg/Delta": 2 * drive_strength * m_ge / m_ef / detuning,
        "Omega/omega_ef": drive_strength / omega_ef,
        "G_ef/Delta": coupling_strength * m_ef / m_ge / detuning,
    }
    report = {name: {"ratio": ratio, "valid": ratio < threshold} for name, ratio in ratios.items()}
    for name, entry in report.items():
        if not entry["valid"]:
            logger.warning("Rotating-wave criterion %s = %.3f is not small", name, entry["ratio"])

    return report


def _dephasing_fixed_point(
    level: JpmLevel,
    slope: float,
    amplitude: float,
    cutoff: float,
    *,
    seed: float,
    tolerance: float,
    max_iterations: int,
) -> tuple[float, float]:
    if amplitude == 0 or slope == 0:
        return 0.0, 0.0

    zeta = seed
    for iteration in range(max_iterations):
        rate = math.sqrt(zeta) * amplitude * abs(slope)
        updated = math.log(2.516 * rate / cutoff)
        if not math.isfinite(updated) or updated <= 0:
            raise FixedPointDiverged(level.value, updated)
        if abs(updated - zeta) < tolerance:
            logger.debug("zeta_%s converged in %d iterations", level.value, iteration + 1)
            return math.sqrt(updated) * amplitude * abs(slope), updated
        zeta = updated

    raise FixedPointDiverged(level.value, zeta)


def dephasing_rates(
    spec: JpmSpec,
    *,
    flux_noise_amplitude: float,
    cutoff: float,
    flux_step: float = 1e-4,
    zeta_seed: float = 10.0,
    zeta_tolerance: float = 1e-6,
    max_iterations: int = 200,
    settings: SpectrumSettings | None = None,
) -> DephasingRates:
    """
    Gaussian 1/f dephasing rates Gamma_l = sqrt(zeta_l) A_Phi |d omega_lg / d Phi_b| of e and f,
    zeta_l = ln(2.516 Gamma_l / cutoff) found by fixed-point iteration. The flux derivative is a
    central difference over spectra solved at Phi_b -/+ flux_step.

    :param spec: A JpmSpec at the operating bias.
    :param flux_noise_amplitude: A_Phi in units of Phi_0.
    :param cutoff: Low-frequency noise cutoff in rad/s.
    :param flux_step: Central-difference step in Phi_0.
    :param settings: Spectrum settings of the neighbouring solves.
    :return: A DephasingRates.
    :raise FixedPointDiverged: If the zeta iteration leaves the positive reals or does not settle.
    """
    settings = settings or SpectrumSettings()
    neighbours = []
    for bias in (spec.bias_flux - flux_step, spec.bias_flux + flux_step):
        shifted = spec.with_bias(bias)
        neighbours.append(
            solve_spectrum(
                shifted,
                **(settings.solver_kwargs(shifted) | {"verify_convergence": False}),
            )
        )

    dephasing, zeta, slopes = {}, {}, {}
    for level in (JpmLevel.E, JpmLevel.F):
        below, above = (
            spectrum.transition_frequency(level, JpmLevel.G) for spectrum in neighbours
        )
        slopes[level] = (above - below) / (2 * flux_step)
        dephasing[level], zeta[level] = _dephasing_fixed_point(
            level,
            slopes[level],
            flux_noise_amplitude,
            cutoff,
            seed=zeta_seed,
            tolerance=zeta_tolerance,
            max_iterations=max_iterations,
        )

    return DephasingRates(
        dephasing=dephasing,
        zeta=zeta,
        slopes=slopes,
        flux_noise_amplitude=flux_noise_amplitude,
        cutoff=cutoff,
    )

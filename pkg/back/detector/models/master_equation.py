"""
Provides the open-system dynamics of the detector: the truncated composite Hilbert space
storage (x) buffer (x) JPM{g, e, f, s} (x) filter, the rotating-frame Hamiltonian, the
dissipation channels and the integration of the Lindblad master equation.

Rates and frequencies are in rad/s, times in seconds.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from scipy.integrate import solve_ivp

from back.detector.utils import JpmLevel, Label
from back.detector.utils import operators as ops
from back.detector.utils import units
from back.detector.utils.custom_exceptions import (
    DimensionMismatch,
    NegativeRate,
    PreconditionViolated,
    StepFailure,
    ToleranceNotMet,
)
from config import Config

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    Label.TIME_NS.value,
    Label.POP_G.value,
    Label.POP_E.value,
    Label.POP_F.value,
    Label.POP_S.value,
    Label.N_STORAGE.value,
    Label.N_BUFFER.value,
    Label.N_FILTER.value,
]

JPM_DIM = len(JpmLevel)

# Longest capture window the Gaussian dephasing law is calibrated for.
MAX_CAPTURE_TIME_NS = 100.0

RATE_FIELDS = (
    "loss_1",
    "loss_2",
    "gamma_eg",
    "kappa_eg",
    "kappa_filter",
    "sink_g",
    "sink_e",
    "sink_f",
    "gamma_fe",
    "gamma_fg",
    "kappa_fe",
    "kappa_fg",
    "dephasing_e",
    "dephasing_f",
)


class HilbertSpace(BaseModel):
    """
    Truncation of the composite space; the JPM factor always holds the four levels g, e, f, s.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    storage_dim: int = Field(default=5, ge=3)
    buffer_dim: int = Field(default=3, ge=2)
    filter_dim: int = Field(default=3, ge=2)
    max_dimension: int = Field(default=4096, ge=JPM_DIM * 12)

    @model_validator(mode="after")
    def check_dimension(self):
        if self.dimension > self.max_dimension:
            raise ValueError(
                f"dimension {self.dimension} exceeds the memory budget of {self.max_dimension}"
            )

        return self

    @classmethod
    def from_config(cls, **overrides: int) -> "HilbertSpace":
        truncation = Config().get_truncation()

        return cls(
            **(
                {
                    "storage_dim": truncation["storage"],
                    "buffer_dim": truncation["buffer"],
                    "filter_dim": truncation["filter"],
                }
                | overrides
            )
        )

    @property
    def dimensions(self) -> tuple[int, int, int, int]:
        return self.storage_dim, self.buffer_dim, JPM_DIM, self.filter_dim

    @property
    def dimension(self) -> int:
        return math.prod(self.dimensions)

    def storage_annihilation(self) -> sparse.csc_matrix:
        return ops.embed(ops.annihilation(self.storage_dim), 0, self.dimensions)

    def buffer_annihilation(self) -> sparse.csc_matrix:
        return ops.embed(ops.annihilation(self.buffer_dim), 1, self.dimensions)

    def filter_annihilation(self) -> sparse.csc_matrix:
        return ops.embed(ops.annihilation(self.filter_dim), 3, self.dimensions)

    def jpm(self, row: JpmLevel, column: JpmLevel) -> sparse.csc_matrix:
        """
        sigma_{row column} = |row><column| on the JPM factor.
        """
        return ops.embed(
            ops.transition(JPM_DIM, row.get_index(), column.get_index()), 2, self.dimensions
        )

    def index(self, n_storage: int, n_buffer: int, level: JpmLevel, n_filter: int) -> int:
        return int(
            np.ravel_multi_index(
                (n_storage, n_buffer, level.get_index(), n_filter), self.dimensions
            )
        )

    def incremented(self, factor: str) -> "HilbertSpace":
        """
        Same truncation with one more state in `factor` ('storage_dim', 'buffer_dim' or 'filter_dim').
        """
        return self.model_validate(self.model_dump() | {factor: getattr(self, factor) + 1})


class ModelParams(BaseModel):
    """
    Every frequency, coupling and rate of the reduced model in rad/s; capture time in seconds.
    Rates are checked when dissipators are built.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_1: float
    omega_2: float
    omega_ge: float
    omega_gf: float
    omega_drive: float
    omega_filter: float
    kerr_1: float = 0.0
    kerr_2: float = 0.0
    two_photon: float = 0.0
    jpm_coupling: float = 0.0
    drive_strength: float = 0.0
    loss_1: float = 0.0
    loss_2: float = 0.0
    gamma_eg: float = 0.0
    kappa_eg: float = 0.0
    kappa_filter: float = 0.0
    sink_g: float = 0.0
    sink_e: float = 0.0
    sink_f: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    kappa_fe: float = 0.0
    kappa_fg: float = 0.0
    dephasing_e: float = 0.0
    dephasing_f: float = 0.0
    efficiency: float = Field(default=1.0, ge=0, le=1)
    capture_time: float = Field(default=50e-9, ge=0)

    def with_updates(self, **changes: float) -> "ModelParams":
        return self.model_validate(self.model_dump() | changes)

    def detunings(self) -> dict[str, float]:
        pump = 2 * self.omega_1

        return {
            "buffer": self.omega_2 - pump,
            "e": self.omega_ge - pump,
            "f": self.omega_gf - pump - self.omega_drive,
            "filter": self.omega_filter - pump,
        }

    def resonance_flags(self) -> dict[str, bool]:
        def close(first: float, second: float) -> bool:
            return math.isclose(first, second, rel_tol=1e-9, abs_tol=1e-3)

        return {
            "two_photon": close(2 * self.omega_1, self.omega_2),
            "buffer_jpm": close(self.omega_2, self.omega_ge),
            "drive": close(self.omega_drive, self.omega_gf - self.omega_ge),
        }


class RateRatios(BaseModel):
    """
    JPM relaxation ratios in units of the g-e rate, shared by internal and engineered baths:
    Gamma_fg, Gamma_fe and the aggregate deep-well rates of f, e, g.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    fg: float = Field(default=0.0184, ge=0)
    fe: float = Field(default=0.0458, ge=0)
    sink_f: float = Field(default=121.56, ge=0)
    sink_e: float = Field(default=0.4817, ge=0)
    sink_g: float = Field(default=0.0007, ge=0)


class DetectorSettings(BaseModel):
    """
    Detector parameters in the units they are quoted in: frequencies f = omega / 2 pi
    in GHz, MHz or kHz, capture time in ns.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    jpm_coupling_mhz: float
    g21_mhz: float
    omega_1_ghz: float = Field(gt=0)
    kerr_1_khz: float = 0.0
    loss_1_khz: float = 0.0
    omega_2_ghz: float = Field(gt=0)
    kerr_2_khz: float = 0.0
    loss_2_khz: float = 0.0
    omega_ge_ghz: float = Field(gt=0)
    drive_frequency_ghz: float = Field(gt=0)
    drive_strength_mhz: float
    gamma_eg_mhz: float = 0.0
    kappa_eg_mhz: float = 0.0
    efficiency: float = Field(default=1.0, ge=0, le=1)
    capture_time_ns: float = Field(default=50.0, gt=0, le=MAX_CAPTURE_TIME_NS)
    dephasing_e_mhz: float = 0.0
    dephasing_f_mhz: float = 0.0
    filter_ratio: float = Field(default=100.0, ge=0)
    omega_gf_ghz: float | None = None
    omega_filter_ghz: float | None = None
    rate_ratios: RateRatios = RateRatios()

    @classmethod
    def from_config(cls, name: str = "A", **overrides: Any) -> "DetectorSettings":
        return cls(**(Config().get_parameter_set(name) | overrides))

    def with_updates(self, **changes: Any) -> "DetectorSettings":
        return self.model_validate(self.model_dump() | changes)

    def to_model_params(self) -> ModelParams:
        """
        Convert to rad/s and expand the relaxation ratios:
        kappa_f = filter_ratio kappa_eg, Gamma_fl = r_fl Gamma_eg, kappa_fl = r_fl kappa_eg,
        gamma_l = r_l (Gamma_eg + kappa_eg). omega_gf defaults to omega_ge + omega_dr and
        the filter frequency to omega_ge.
        """
        omega_ge = units.from_ghz(self.omega_ge_ghz)
        omega_drive = units.from_ghz(self.drive_frequency_ghz)
        gamma_eg = units.from_mhz(self.gamma_eg_mhz)
        kappa_eg = units.from_mhz(self.kappa_eg_mhz)
        ratios = self.rate_ratios

        return ModelParams(
            omega_1=units.from_ghz(self.omega_1_ghz),
            omega_2=units.from_ghz(self.omega_2_ghz),
            omega_ge=omega_ge,
            omega_gf=units.from_ghz(self.omega_gf_ghz)
            if self.omega_gf_ghz is not None
            else omega_ge + omega_drive,
            omega_drive=omega_drive,
            omega_filter=units.from_ghz(self.omega_filter_ghz)
            if self.omega_filter_ghz is not None
            else omega_ge,
            kerr_1=units.from_khz(self.kerr_1_khz),
            kerr_2=units.from_khz(self.kerr_2_khz),
            two_photon=units.from_mhz(self.g21_mhz),
            jpm_coupling=units.from_mhz(self.jpm_coupling_mhz),
            drive_strength=units.from_mhz(self.drive_strength_mhz),
            loss_1=units.from_khz(self.loss_1_khz),
            loss_2=units.from_khz(self.loss_2_khz),
            gamma_eg=gamma_eg,
            kappa_eg=kappa_eg,
            kappa_filter=self.filter_ratio * kappa_eg,
            sink_g=ratios.sink_g * (gamma_eg + kappa_eg),
            sink_e=ratios.sink_e * (gamma_eg + kappa_eg),
            sink_f=ratios.sink_f * (gamma_eg + kappa_eg),
            gamma_fe=ratios.fe * gamma_eg,
            gamma_fg=ratios.fg * gamma_eg,
            kappa_fe=ratios.fe * kappa_eg,
            kappa_fg=ratios.fg * kappa_eg,
            dephasing_e=units.from_mhz(self.dephasing_e_mhz),
            dephasing_f=units.from_mhz(self.dephasing_f_mhz),
            efficiency=self.efficiency,
            capture_time=self.capture_time_ns * 1e-9,
        )


class IntegratorSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: str = "DOP853"
    rtol: float = Field(default=1e-8, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    trace_tolerance: float = Field(default=1e-7, gt=0)
    output_points: int = Field(default=101, ge=2)

    @classmethod
    def from_config(cls, **overrides: Any) -> "IntegratorSettings":
        return cls(**(Config().get_solver_tolerances() | overrides))


@dataclass(frozen=True)
class Channel:
    """
    Collapse operator with rate r(t) = constant + slope * t (rad/s, t in seconds from the capture start).
    """

    name: str
    operator: sparse.csc_matrix
    constant: float = 1.0
    slope: float = 0.0

    def rate(self, t: float) -> float:
        return self.constant + self.slope * t


@dataclass(frozen=True)
class EvolutionResult:
    """
    Sampled expectation traces (populations of g, e, f, s and the three photon numbers)
    and the final density operator of one evolution.
    """

    times: np.ndarray
    traces: pd.DataFrame
    final_state: np.ndarray
    runtime: float = 0.0

    def final_population(self, level: JpmLevel) -> float:
        return float(self.traces[f"pop_{level.value}"].iloc[-1])

    def summary(self) -> dict[str, Any]:
        final = self.traces.iloc[-1]

        return {
            "t_end_ns": float(final[Label.TIME_NS.value]),
            "samples": len(self.traces),
            **{column: float(final[column]) for column in TRACE_COLUMNS[1:]},
            **state_diagnostics(self.final_state),
        }


def build_hamiltonian(space: HilbertSpace, params: ModelParams) -> sparse.csc_matrix:
    """
    Rotating-frame Hamiltonian H / hbar (rad/s) of the resonators, the four-level JPM and the filter.
    The frame rotates at omega_1 per storage photon, 2 omega_1 per buffer photon, per sigma_ee and
    per filter photon, and at 2 omega_1 + omega_dr for sigma_ff:

    H = D2 a2^+a2 + De s_ee + Df s_ff + Df' f^+f - K1 a1^+2 a1^2 - K2 a2^+2 a2^2
        + g21 (a1^+2 a2 + a2^+ a1^2) - G (a2^+ s_ge + s_eg a2) + i Omega (s_fe - s_ef)

    :param space: A HilbertSpace.
    :param params: A ModelParams.
    :return: A sparse Hermitian (D x D) matrix.
    """
    storage = space.storage_annihilation()
    buffer = space.buffer_annihilation()
    filter_mode = space.filter_annihilation()
    storage_dag, buffer_dag = ops.dagger(storage), ops.dagger(buffer)
    detunings = params.detunings()
    sigma = space.jpm

    hamiltonian = (
        detunings["buffer"] * (buffer_dag @ buffer)
        + detunings["e"] * sigma(JpmLevel.E, JpmLevel.E)
        + detunings["f"] * sigma(JpmLevel.F, JpmLevel.F)
        + detunings["filter"] * (ops.dagger(filter_mode) @ filter_mode)
        - params.kerr_1 * (storage_dag @ storage_dag @ storage @ storage)
        - params.kerr_2 * (buffer_dag @ buffer_dag @ buffer @ buffer)
        + params.two_photon
        * (storage_dag @ storage_dag @ buffer + buffer_dag @ storage @ storage)
        - params.jpm_coupling
        * (buffer_dag @ sigma(JpmLevel.G, JpmLevel.E) + sigma(JpmLevel.E, JpmLevel.G) @ buffer)
        + 1j
        * params.drive_strength
        * (sigma(JpmLevel.F, JpmLevel.E) - sigma(JpmLevel.E, JpmLevel.F))
    )

    return sparse.csc_matrix(hamiltonian)


def build_dissipators(space: HilbertSpace, params: ModelParams) -> list[Channel]:
    """
    Dissipation channels of the reduced model. Channels whose rate vanishes are left out,
    so that all-zero rates give unitary evolution.

    The engineered g-e decay and the filter share one collapse operator
    sqrt(kappa_eg) s_ge + sqrt(kappa_f) f, which makes the two decay paths interfere.
    Pure dephasing of e and f grows as 2 Gamma_phi^2 t.

    :param space: A HilbertSpace.
    :param params: A ModelParams.
    :return: A list of Channel.
    :raise NegativeRate: If any rate is negative.
    """
    for name in RATE_FIELDS:
        if (rate := getattr(params, name)) < 0:
            raise NegativeRate(name, rate)

    sigma = space.jpm
    channels = [
        Channel("storage_loss", space.storage_annihilation(), params.loss_1),
        Channel("buffer_loss", space.buffer_annihilation(), params.loss_2),
        Channel("internal_eg", sigma(JpmLevel.G, JpmLevel.E), params.gamma_eg),
        Channel(
            "relaxation_fe", sigma(JpmLevel.E, JpmLevel.F), params.gamma_fe + params.kappa_fe
        ),
        Channel(
            "relaxation_fg", sigma(JpmLevel.G, JpmLevel.F), params.gamma_fg + params.kappa_fg
        ),
        Channel("sink_g", sigma(JpmLevel.S, JpmLevel.G), params.sink_g),
        Channel("sink_e", sigma(JpmLevel.S, JpmLevel.E), params.sink_e),
        Channel("sink_f", sigma(JpmLevel.S, JpmLevel.F), params.sink_f),
        Channel("dephasing_e", sigma(JpmLevel.E, JpmLevel.E), 0.0, 2 * params.dephasing_e**2),
        Channel("dephasing_f", sigma(JpmLevel.F, JpmLevel.F), 0.0, 2 * params.dephasing_f**2),
    ]
    if params.kappa_eg > 0 or params.kappa_filter > 0:
        correlated = math.sqrt(params.kappa_eg) * sigma(
            JpmLevel.G, JpmLevel.E
        ) + math.sqrt(params.kappa_filter) * space.filter_annihilation()
        channels.append(Channel("engineered_eg", sparse.csc_matrix(correlated), 1.0))

    return [channel for channel in channels if channel.constant > 0 or channel.slope > 0]


def fock_state(
    space: HilbertSpace,
    n_storage: int = 2,
    n_buffer: int = 0,
    jpm_level: JpmLevel = JpmLevel.G,
    n_filter: int = 0,
) -> np.ndarray:
    """
    Product state |n_storage> (x) |n_buffer> (x) |jpm_level> (x) |n_filter> as a dense density operator.

    :raise PreconditionViolated: If a photon number does not fit its truncation.
    """
    for count, size, name in (
        (n_storage, space.storage_dim, "storage"),
        (n_buffer, space.buffer_dim, "buffer"),
        (n_filter, space.filter_dim, "filter"),
    ):
        if not 0 <= count < size:
            raise PreconditionViolated("fock_state", f"0 <= n_{name} < {size}")

    state = np.zeros((space.dimension, space.dimension), dtype=complex)
    index = space.index(n_storage, n_buffer, jpm_level, n_filter)
    state[index, index] = 1.0

    return state


def _observable_diagonals(space: HilbertSpace) -> dict[str, np.ndarray]:
    """
    Every traced observable is diagonal in the product basis.
    """
    buffer, storage, filter_mode = (
        space.buffer_annihilation(),
        space.storage_annihilation(),
        space.filter_annihilation(),
    )
    diagonals = {
        f"pop_{level.value}": space.jpm(level, level).diagonal().real for level in JpmLevel
    }
    diagonals[Label.N_STORAGE.value] = (ops.dagger(storage) @ storage).diagonal().real
    diagonals[Label.N_BUFFER.value] = (ops.dagger(buffer) @ buffer).diagonal().real
    diagonals[Label.N_FILTER.value] = (ops.dagger(filter_mode) @ filter_mode).diagonal().real

    return diagonals


def state_diagnostics(state: np.ndarray) -> dict[str, float]:
    """
    Trace error, Hermiticity error, smallest eigenvalue and purity of a density operator.
    """
    hermitian = (state + state.conj().T) / 2

    return {
        "trace_error": float(abs(np.trace(state) - 1)),
        "hermiticity_error": float(np.max(np.abs(state - state.conj().T))),
        "min_eigenvalue": float(np.linalg.eigvalsh(hermitian)[0]),
        "purity": float(np.real(np.vdot(state.conj().T, state))),
    }


def evolve(
    initial_state: np.ndarray,
    hamiltonian: sparse.spmatrix,
    channels: list[Channel],
    t_end: float,
    output_times: np.ndarray | None = None,
    *,
    space: HilbertSpace,
    settings: IntegratorSettings | None = None,
) -> EvolutionResult:
    """
    Integrate d rho / dt = -i [H, rho] + sum_k r_k(t) (L_k rho L_k^+ - {L_k^+ L_k, rho} / 2)
    with an adaptive Runge-Kutta scheme on the dense density operator.

    :param initial_state: Dense (D x D) density operator at t = 0.
    :param hamiltonian: Sparse H / hbar (rad/s).
    :param channels: Channels from build_dissipators.
    :param t_end: Final time in seconds.
    :param output_times: Sampling times, defaults to `settings.output_points` evenly spaced points.
    :param space: The HilbertSpace every operator lives in.
    :param settings: Integrator method and tolerances.
    :return: An EvolutionResult.
    :raise DimensionMismatch: If the state or an operator does not match the space.
    :raise StepFailure: If the integrator cannot proceed.
    :raise ToleranceNotMet: If the trace drifts beyond tolerance.
    """
    settings = settings or IntegratorSettings()
    dimension = space.dimension
    for matrix in (initial_state, hamiltonian, *(channel.operator for channel in channels)):
        if matrix.shape != (dimension, dimension):
            raise DimensionMismatch(dimension, matrix.shape[0])
    if output_times is None:
        output_times = np.linspace(0.0, t_end, settings.output_points)

    hamiltonian = sparse.csr_matrix(hamiltonian, dtype=complex)
    jumps = [sparse.csr_matrix(channel.operator, dtype=complex) for channel in channels]
    decays = [sparse.csr_matrix(ops.dagger(jump) @ jump) for jump in jumps]
    constant_part = hamiltonian - 0.5j * sum(
        (channel.constant * decay for channel, decay in zip(channels, decays)),
        sparse.csr_matrix((dimension, dimension), dtype=complex),
    )
    growing = [
        (channel.slope, decay, jump)
        for channel, decay, jump in zip(channels, decays, jumps)
        if channel.slope > 0
    ]

    def derivative(t: float, flat: np.ndarray) -> np.ndarray:
        state = flat.reshape(dimension, dimension)
        effective = constant_part
        for slope, decay, _ in growing:
            effective = effective - 0.5j * slope * t * decay
        left = effective @ state
        change = -1j * (left - left.conj().T)
        for channel, jump in zip(channels, jumps):
            rate = channel.rate(t)
            if rate:
                change += rate * (jump @ (jump @ state).conj().T)
        change = (change + change.conj().T) / 2

        return change.ravel()

    start = time.perf_counter()
    try:
        solution = solve_ivp(
            derivative,
            (0.0, t_end),
            initial_state.astype(complex).ravel(),
            method=settings.method,
            t_eval=output_times,
            rtol=settings.rtol,
            atol=settings.atol,
        )
    except np.linalg.LinAlgError as error:
        raise StepFailure(math.nan, f"linear algebra failure: {error}") from error
    runtime = time.perf_counter() - start
    if solution.status == -1:
        failed_at = float(solution.t[-1]) if len(solution.t) else 0.0
        raise StepFailure(failed_at, solution.message)

    states = solution.y.T.reshape(-1, dimension, dimension)
    diagonals = np.real(np.einsum("tii->ti", states))
    drift = float(np.max(np.abs(diagonals.sum(axis=1) - 1)))
    if drift > settings.trace_tolerance:
        raise ToleranceNotMet("trace", drift, settings.trace_tolerance)

    observables = _observable_diagonals(space)
    traces = pd.DataFrame(
        {
            Label.TIME_NS.value: solution.t * 1e9,
            **{name: diagonals @ values for name, values in observables.items()},
        },
        columns=TRACE_COLUMNS,
    )
    logger.info(
        "Evolved D=%d over %.1f ns with %d channels in %.2f s (%d RHS calls)",
        dimension,
        t_end * 1e9,
        len(channels),
        runtime,
        solution.nfev,
    )

    return EvolutionResult(
        times=solution.t, traces=traces, final_state=states[-1], runtime=runtime
    )


def click_probability(state: np.ndarray, efficiency: float, *, space: HilbertSpace) -> float:
    """
    P_clk = eta Tr[rho sigma_ss].
    """
    projector = space.jpm(JpmLevel.S, JpmLevel.S).diagonal().real

    return efficiency * float(np.real(np.diagonal(state)) @ projector)


def false_click_probability(sink_rate: float, capture_time: float, efficiency: float) -> float:
    """
    Dark-count probability eta (1 - exp(-gamma_g t_cpt)) of a JPM left in |g>.

    :param sink_rate: gamma_g in rad/s.
    :param capture_time: t_cpt in seconds.
    :param efficiency: Readout efficiency eta.
    :return: The false click probability.
    """
    if sink_rate < 0 or capture_time < 0:
        raise PreconditionViolated("false_click_probability", "gamma_g >= 0 and t_cpt >= 0")

    return efficiency * -math.expm1(-sink_rate * capture_time)


def capture_trajectory(
    params: ModelParams,
    space: HilbertSpace | None = None,
    *,
    input_photons: int = 2,
    settings: IntegratorSettings | None = None,
) -> EvolutionResult:
    """
    Evolve |n>|0>|g>|0> over the capture window [0, t_cpt].

    :param params: A ModelParams.
    :param space: A HilbertSpace, default truncations when unset.
    :param input_photons: Photons initially in the storage resonator.
    :param settings: Integrator settings.
    :return: An EvolutionResult.
    """
    space = space or HilbertSpace()
    if params.capture_time * 1e9 > MAX_CAPTURE_TIME_NS:
        logger.warning(
            "Capture time %.1f ns extrapolates the Gaussian dephasing law", params.capture_time * 1e9
        )

    return evolve(
        fock_state(space, input_photons),
        build_hamiltonian(space, params),
        build_dissipators(space, params),
        params.capture_time,
        space=space,
        settings=settings,
    )

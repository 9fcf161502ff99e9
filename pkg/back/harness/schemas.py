"""
Pydantic models of the JSON run configurations, one per subcommand, and their loading.
Every model forbids unknown keys.
"""

import json
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from back.detector.models.coupled_resonators import CouplerSpec, ResonatorSpec
from back.detector.models.detection_fidelity import SweepAxis, SweepSpec
from back.detector.models.master_equation import DetectorSettings, HilbertSpace
from back.detector.models.photomultiplier import (
    DephasingSettings,
    JpmSpec,
    SpectrumSettings,
)
from back.detector.utils.custom_exceptions import ConfigError
from config import Config

Schema = TypeVar("Schema", bound=BaseModel)


class StrictModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FluxGrid(StrictModel):
    """
    Coupler fluxes (Phi_0) of a map: Phi_c on the fast axis, Phi'_c on the slow one.
    """

    flux_min: float = 0.0
    flux_max: float = 1.0
    flux_points: int = Field(default=101, ge=1)
    flux_prime_min: float = 0.0
    flux_prime_max: float = 0.0
    flux_prime_points: int = Field(default=1, ge=1)


class CouplerRunConfig(StrictModel):
    resonators: list[ResonatorSpec] | None = Field(default=None, min_length=2, max_length=2)
    coupler: CouplerSpec | None = None
    flux_grid: FluxGrid = FluxGrid()
    k_max: int | None = Field(default=None, ge=3)
    locus_asymmetries: list[float] = []
    off_point_branches: list[int] = [0]

    def resonator_pair(self) -> tuple[ResonatorSpec, ResonatorSpec]:
        if self.resonators is None:
            return ResonatorSpec.pair_from_config()

        return self.resonators[0], self.resonators[1]

    def coupler_spec(self) -> CouplerSpec:
        return self.coupler or CouplerSpec.from_config()

    def expansion_order(self) -> int:
        if self.k_max is None:
            return Config().get_coupler_settings()["k_max"]

        return self.k_max


class CouplingTargets(StrictModel):
    """
    Buffer resonator the JPM couples to, and optional targets for G and Omega (MHz)
    from which C_G and the drive amplitude are solved.
    """

    buffer: ResonatorSpec
    coupling_mhz: float | None = Field(default=None, gt=0)
    drive_mhz: float | None = Field(default=None, gt=0)


class JpmRunConfig(StrictModel):
    jpm: JpmSpec | None = None
    spectrum: SpectrumSettings | None = None
    profile_biases: list[float] = [0.5, 0.6, 0.6316, 0.7]
    profile_points: int = Field(default=1201, ge=2)
    wavefunction_stride: int = Field(default=10, ge=1)
    gamma_eg_mhz: float | None = Field(default=None, ge=0)
    kappa_eg_mhz: float | None = Field(default=None, ge=0)
    dephasing: DephasingSettings | None = None
    coupling: CouplingTargets | None = None

    def jpm_spec(self) -> JpmSpec:
        return self.jpm or JpmSpec.from_config()

    def spectrum_settings(self) -> SpectrumSettings:
        return self.spectrum or SpectrumSettings.from_config()


class SimulateRunConfig(StrictModel):
    """
    A named parameter set from config.yml, field overrides on top of it, the input photon
    number and optional truncations.
    """

    parameter_set: str | None = "A"
    settings: dict[str, Any] = {}
    input_photons: int = Field(default=2, ge=0)
    truncation: HilbertSpace | None = None
    check_truncation: bool = False

    @model_validator(mode="after")
    def check_settings(self):
        self.detector_settings()

        return self

    def detector_settings(self) -> DetectorSettings:
        if self.parameter_set is None:
            return DetectorSettings(**self.settings)

        return DetectorSettings.from_config(self.parameter_set, **self.settings)

    def hilbert_space(self) -> HilbertSpace:
        return self.truncation or HilbertSpace.from_config()


class SweepRunConfig(SimulateRunConfig):
    axes: list[SweepAxis] = Field(min_length=1, max_length=2)
    maximize_over: bool = False
    compare_optimum: bool = False
    layout: str = Field(default="csv", pattern="^(csv|gnuplot)$")
    input_photons: int = Field(default=2, ge=2)

    @model_validator(mode="after")
    def check_sweep(self):
        self.sweep_spec()

        return self

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec.from_config(
            self.axes,
            self.detector_settings(),
            input_photons=self.input_photons,
            maximize_over=self.maximize_over,
        )


class TablesRunConfig(StrictModel):
    jpm: JpmSpec | None = None
    spectrum: SpectrumSettings | None = None
    dephasing: DephasingSettings | None = None
    parameter_sets: list[str] = ["A", "B"]
    include_fidelity: bool = True
    truncation: HilbertSpace | None = None

    @model_validator(mode="after")
    def check_parameter_sets(self):
        for name in self.parameter_sets:
            DetectorSettings.from_config(name)

        return self


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in issue['loc']) or '<root>'}: {issue['msg']}"
        for issue in error.errors()
    )


def load_run_config(path: str | Path, schema: type[Schema]) -> Schema:
    """
    Parse and validate a JSON run configuration.

    :param path: Path to the JSON file.
    :param schema: The run configuration model of the subcommand.
    :return: A validated schema instance.
    :raise FileNotFoundError: If the file does not exist.
    :raise ConfigError: If the file is not valid JSON or does not match the schema,
    with the line or key path of the first problems.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'Run configuration not found at "{path}"')

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

    try:
        return schema.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(path), _describe(exc)) from exc
    except KeyError as exc:
        raise ConfigError(str(path), str(exc)) from exc

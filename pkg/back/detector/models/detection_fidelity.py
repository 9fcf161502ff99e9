"""
Provides two-photon detection fidelity F = (1 + P_clk|2 - P_clk|<2) / 2, parameter sweeps
evaluated in parallel worker processes, and a bounded grid-plus-coordinate-descent optimizer.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from back.detector.models.master_equation import (
    DetectorSettings,
    HilbertSpace,
    IntegratorSettings,
    ModelParams,
    capture_trajectory,
    click_probability,
    false_click_probability,
)
from back.detector.utils import AxisScale, Label
from back.detector.utils.custom_exceptions import (
    BoxTooSmall,
    DetectorError,
    PreconditionViolated,
)
from config import Config

logger = logging.getLogger(__name__)

FIDELITY_MAP_COLUMNS = [
    Label.AXIS_1.value,
    Label.AXIS_2.value,
    Label.P_CLK_2.value,
    Label.P_DARK.value,
    Label.FIDELITY.value,
    Label.STATUS.value,
]

FREE_PARAMETERS = ("g21_mhz", "drive_strength_mhz")

OK = "ok"


@dataclass(frozen=True)
class FidelityPoint:
    """
    Fidelity at one parameter point. Failed evaluations carry NaN probabilities and
    the name of the error in `status`. The wall-clock `runtime` is logged but never exported.
    """

    parameters: dict[str, float]
    click_two: float
    dark_count: float
    fidelity: float
    status: str = OK
    runtime: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.status == OK

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameters": self.parameters,
            "P_clk2": self.click_two,
            "P_dark": self.dark_count,
            "F": self.fidelity,
            "status": self.status,
            **self.metadata,
        }


class SweepAxis(BaseModel):
    """
    One sweep axis over a DetectorSettings field, e.g. 'g21_mhz' or 'capture_time_ns'.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    minimum: float
    maximum: float
    points: int = Field(default=25, ge=1)
    scale: AxisScale = AxisScale.LINEAR

    @model_validator(mode="after")
    def check_axis(self):
        if self.name not in DetectorSettings.model_fields:
            raise ValueError(f"unknown parameter {self.name!r}")
        if self.maximum < self.minimum:
            raise ValueError("maximum must not be below minimum")
        if self.scale == AxisScale.LOG and self.minimum <= 0:
            raise ValueError("a log axis needs a positive minimum")

        return self

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.minimum])
        if self.scale == AxisScale.LOG:
            return np.geomspace(self.minimum, self.maximum, self.points)

        return np.linspace(self.minimum, self.maximum, self.points)


class SweepSpec(BaseModel):
    """
    One or two axes, a baseline and the input Fock state.
    Axis bounds are kept inside the rotating-wave guards |g21| < fraction * omega_1 and
    Omega < fraction * omega_ef, omega_ef being the drive frequency at resonance.
    With `maximize_over`, every cell reports the fidelity maximized over (g21, Omega).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    axes: list[SweepAxis] = Field(min_length=1, max_length=2)
    baseline: DetectorSettings
    input_photons: int = Field(default=2, ge=2)
    maximize_over: bool = False
    rwa_g21_fraction: float = Field(default=0.05, gt=0)
    rwa_drive_fraction: float = Field(default=0.2, gt=0)

    @model_validator(mode="after")
    def check_rwa_guards(self):
        guards = {
            "g21_mhz": self.rwa_g21_fraction * self.baseline.omega_1_ghz * 1e3,
            "drive_strength_mhz": self.rwa_drive_fraction
            * self.baseline.drive_frequency_ghz
            * 1e3,
        }
        for axis in self.axes:
            for edge in (axis.minimum, axis.maximum):
                self.baseline.with_updates(**{axis.name: edge})
            if axis.name in guards:
                bound = max(abs(axis.minimum), abs(axis.maximum))
                if bound >= guards[axis.name]:
                    raise ValueError(
                        f"axis {axis.name} reaches {bound} MHz, beyond the rotating-wave guard "
                        f"{guards[axis.name]:.1f} MHz"
                    )

        return self

    @classmethod
    def from_config(
        cls, axes: list[SweepAxis], baseline: DetectorSettings, **overrides: Any
    ) -> "SweepSpec":
        sweep_settings = Config().get_sweep_settings()

        return cls(
            **(
                {
                    "axes": axes,
                    "baseline": baseline,
                    "rwa_g21_fraction": sweep_settings["rwa_g21_fraction"],
                    "rwa_drive_fraction": sweep_settings["rwa_drive_fraction"],
                }
                | overrides
            )
        )

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(axis.name for axis in self.axes)

    def cells(self) -> list[dict[str, float]]:
        """
        Parameter updates of every grid cell, first axis slowest-varying.
        """
        return [
            dict(zip(self.axis_names, (float(value) for value in values)))
            for values in product(*(axis.values() for axis in self.axes))
        ]


@dataclass(frozen=True)
class FidelityMap:
    axis_names: tuple[str, ...]
    points: list[FidelityPoint]
    best: FidelityPoint | None

    @property
    def maximum_fidelity(self) -> float:
        return self.best.fidelity if self.best is not None else math.nan

    @property
    def failed(self) -> list[FidelityPoint]:
        return [point for point in self.points if not point.succeeded]

    def axis_values(self, point: FidelityPoint) -> tuple[float, float]:
        first = point.parameters[self.axis_names[0]]
        second = point.parameters[self.axis_names[1]] if len(self.axis_names) > 1 else math.nan

        return first, second

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for point in self.points:
            first, second = self.axis_values(point)
            rows.append(
                {
                    Label.AXIS_1.value: first,
                    Label.AXIS_2.value: second,
                    Label.P_CLK_2.value: point.click_two,
                    Label.P_DARK.value: point.dark_count,
                    Label.FIDELITY.value: point.fidelity,
                    Label.STATUS.value: point.status,
                }
            )

        return pd.DataFrame(rows, columns=FIDELITY_MAP_COLUMNS)

    def summary(self, baseline: DetectorSettings | None = None) -> dict[str, Any]:
        return {
            "axes": list(self.axis_names),
            "cells": len(self.points),
            "failed_cells": len(self.failed),
            "F_max": self.maximum_fidelity,
            "argmax": self.best.parameters if self.best is not None else None,
            "baseline": baseline.model_dump() if baseline is not None else None,
        }


def discrimination_fidelity(
    click_probabilities: dict[int, float], priors: dict[int, float] | None = None
) -> float:
    """
    Probability of telling a two-photon input from fewer photons:
    F = sum_{n >= 2} p_n P_clk|n + sum_{n < 2} p_n (1 - P_clk|n).

    :param click_probabilities: Click probability per input photon number.
    :param priors: Input probabilities, p_2 = 1/2 and p_1 = p_0 = 1/4 by default.
    :return: F in [0, 1].
    :raise PreconditionViolated: If priors do not sum to one or miss a photon number.
    """
    priors = priors or {2: 0.5, 1: 0.25, 0: 0.25}
    if not math.isclose(sum(priors.values()), 1.0, abs_tol=1e-12):
        raise PreconditionViolated("discrimination_fidelity", "priors summing to 1")
    if missing := set(priors) - set(click_probabilities):
        raise PreconditionViolated(
            "discrimination_fidelity", f"click probabilities for n in {sorted(missing)}"
        )

    return sum(
        prior * (click_probabilities[n] if n >= 2 else 1 - click_probabilities[n])
        for n, prior in priors.items()
    )


def fidelity(
    params: ModelParams,
    *,
    space: HilbertSpace | None = None,
    settings: IntegratorSettings | None = None,
    input_photons: int = 2,
    parameters: dict[str, float] | None = None,
) -> FidelityPoint:
    """
    Evolve the n-photon input over the capture window for P_clk|n and combine it with the
    closed-form dark count P_clk|<2 = eta (1 - exp(-gamma_g t_cpt)).

    :param params: A ModelParams.
    :param space: A HilbertSpace.
    :param settings: Integrator settings.
    :param input_photons: Photons in the storage resonator at t = 0, at least 2.
    :param parameters: Values to label the point with.
    :return: A FidelityPoint.
    """
    space = space or HilbertSpace()
    start = time.perf_counter()
    result = capture_trajectory(
        params, space, input_photons=input_photons, settings=settings
    )
    click_two = click_probability(result.final_state, params.efficiency, space=space)
    dark_count = false_click_probability(params.sink_g, params.capture_time, params.efficiency)
    point = FidelityPoint(
        parameters=parameters or {},
        click_two=click_two,
        dark_count=dark_count,
        fidelity=discrimination_fidelity({2: click_two, 1: dark_count, 0: dark_count}),
        runtime=time.perf_counter() - start,
    )
    logger.info("F=%.6f at %s in %.2f s", point.fidelity, point.parameters, point.runtime)

    return point


def _evaluate_cell(
    job: tuple[DetectorSettings, dict[str, float], HilbertSpace, IntegratorSettings | None, int]
) -> FidelityPoint:
    settings, update, space, integrator, input_photons = job
    try:
        return fidelity(
            settings.with_updates(**update).to_model_params(),
            space=space,
            settings=integrator,
            input_photons=input_photons,
            parameters=update,
        )
    except DetectorError as exc:
        logger.warning("Cell %s failed: %s", update, exc.message)
        return FidelityPoint(
            parameters=update,
            click_two=math.nan,
            dark_count=math.nan,
            fidelity=math.nan,
            status=type(exc).__name__,
        )


def _evaluate_maximized_cell(
    job: tuple[DetectorSettings, dict[str, float], HilbertSpace, IntegratorSettings | None, int]
) -> FidelityPoint:
    settings, update, space, integrator, input_photons = job
    try:
        best = optimize(
            settings.with_updates(**update),
            space=space,
            integrator=integrator,
            input_photons=input_photons,
        )
    except DetectorError as exc:
        logger.warning("Cell %s failed: %s", update, exc.message)
        return FidelityPoint(update, math.nan, math.nan, math.nan, status=type(exc).__name__)

    return FidelityPoint(
        parameters=update,
        click_two=best.click_two,
        dark_count=best.dark_count,
        fidelity=best.fidelity,
        status=best.status,
        runtime=best.runtime,
        metadata={"optimum": best.parameters, **best.metadata},
    )


def _run_jobs(evaluate, jobs: list, workers: int) -> list[FidelityPoint]:
    if workers <= 1 or len(jobs) <= 1:
        return [evaluate(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(evaluate, jobs))


def _best_point(points: list[FidelityPoint], names: tuple[str, ...]) -> FidelityPoint | None:
    """
    Highest fidelity, ties resolved toward the smallest parameter tuple.
    """
    candidates = [point for point in points if point.succeeded and not math.isnan(point.fidelity)]
    if not candidates:
        return None

    return min(
        candidates,
        key=lambda point: (-point.fidelity, *(point.parameters[name] for name in names)),
    )


def sweep(
    spec: SweepSpec,
    *,
    workers: int = 1,
    space: HilbertSpace | None = None,
    integrator: IntegratorSettings | None = None,
) -> FidelityMap:
    """
    Fidelity over the grid of a SweepSpec. Cells run in worker processes; the output order
    follows the grid (first axis slowest) whatever the completion order. A failing cell is
    recorded with its error name and does not stop the sweep.

    :param spec: A SweepSpec.
    :param workers: Number of worker processes, 1 runs in-process.
    :param space: A HilbertSpace.
    :param integrator: Integrator settings.
    :return: A FidelityMap.
    """
    space = space or HilbertSpace()
    jobs = [(spec.baseline, cell, space, integrator, spec.input_photons) for cell in spec.cells()]
    evaluate = _evaluate_maximized_cell if spec.maximize_over else _evaluate_cell
    start = time.perf_counter()
    points = _run_jobs(evaluate, jobs, workers)
    fidelity_map = FidelityMap(
        axis_names=spec.axis_names,
        points=points,
        best=_best_point(points, spec.axis_names),
    )
    logger.info(
        "Swept %d cells over %s with %d workers in %.1f s (%d failed)",
        len(points),
        ", ".join(spec.axis_names),
        workers,
        time.perf_counter() - start,
        len(fidelity_map.failed),
    )

    return fidelity_map


def default_bounds(
    baseline: DetectorSettings, *, g21_fraction: float = 0.05, drive_fraction: float = 0.2
) -> dict[str, tuple[float, float]]:
    """
    Search box of (g21, Omega) in MHz up to the rotating-wave guards.
    """
    return {
        "g21_mhz": (1.0, g21_fraction * baseline.omega_1_ghz * 1e3),
        "drive_strength_mhz": (1.0, drive_fraction * baseline.drive_frequency_ghz * 1e3),
    }


def optimize(
    baseline: DetectorSettings,
    *,
    free: tuple[str, ...] = FREE_PARAMETERS,
    bounds: dict[str, tuple[float, float]] | None = None,
    coarse_points: int = 5,
    tolerance: float = 1e-4,
    max_steps: int = 60,
    space: HilbertSpace | None = None,
    integrator: IntegratorSettings | None = None,
    input_photons: int = 2,
    workers: int = 1,
) -> FidelityPoint:
    """
    Maximize fidelity over free parameters inside a box: a coarse grid, then coordinate
    descent from its best cell with steps halved whenever no move improves F, until a
    sweep of moves gains less than `tolerance`. An optimum on the box boundary is
    flagged in the metadata and logged.

    :param baseline: DetectorSettings holding the fixed parameters.
    :param free: Names of the free DetectorSettings fields.
    :param bounds: Box per free parameter, rotating-wave guards by default.
    :param coarse_points: Points per axis of the coarse grid.
    :param tolerance: Fidelity gain below which refinement stops.
    :param max_steps: Refinement pass budget.
    :param workers: Worker processes for the coarse grid.
    :return: The best FidelityPoint with 'on_boundary' and 'evaluations' metadata.
    :raise PreconditionViolated: If a free parameter has no bounds or an empty box.
    """
    space = space or HilbertSpace()
    bounds = bounds or default_bounds(baseline)
    for name in free:
        if name not in bounds or bounds[name][1] < bounds[name][0]:
            raise PreconditionViolated("optimize", f"a bounded search box for {name}")

    cache: dict[tuple[float, ...], FidelityPoint] = {}

    def key_of(update: dict[str, float]) -> tuple[float, ...]:
        return tuple(round(update[name], 12) for name in free)

    def evaluate_many(updates: list[dict[str, float]], pool: int = 1) -> list[FidelityPoint]:
        fresh = [update for update in updates if key_of(update) not in cache]
        jobs = [(baseline, update, space, integrator, input_photons) for update in fresh]
        for update, point in zip(fresh, _run_jobs(_evaluate_cell, jobs, pool)):
            cache[key_of(update)] = point
        return [cache[key_of(update)] for update in updates]

    axes = [
        np.linspace(*bounds[name], coarse_points) if coarse_points > 1 else np.array([bounds[name][0]])
        for name in free
    ]
    coarse = [
        dict(zip(free, (float(value) for value in values))) for values in product(*axes)
    ]
    best = _best_point(evaluate_many(coarse, workers), free)
    if best is None:
        raise PreconditionViolated("optimize", "at least one successful coarse grid cell")

    steps = {
        name: (bounds[name][1] - bounds[name][0]) / max(coarse_points - 1, 1) for name in free
    }
    minimum_step = {name: 1e-3 * steps[name] for name in free}
    for _ in range(max_steps):
        before = best.fidelity
        for name in free:
            for direction in (-1, 1):
                value = min(
                    max(best.parameters[name] + direction * steps[name], bounds[name][0]),
                    bounds[name][1],
                )
                candidate = evaluate_many([best.parameters | {name: value}])[0]
                if candidate.succeeded and candidate.fidelity > best.fidelity:
                    best = candidate
        gain = best.fidelity - before
        if gain == 0:
            steps = {name: step / 2 for name, step in steps.items()}
            if all(steps[name] < minimum_step[name] for name in free):
                break
        elif gain < tolerance:
            break

    on_boundary = any(
        math.isclose(best.parameters[name], edge, rel_tol=0, abs_tol=1e-9 * max(1.0, abs(edge)))
        for name in free
        for edge in bounds[name]
    )
    if on_boundary:
        logger.warning("%s", BoxTooSmall(best.parameters).message)
    logger.info(
        "Optimum F=%.5f at %s after %d evaluations", best.fidelity, best.parameters, len(cache)
    )

    return FidelityPoint(
        parameters=best.parameters,
        click_two=best.click_two,
        dark_count=best.dark_count,
        fidelity=best.fidelity,
        status=best.status,
        runtime=best.runtime,
        metadata={"on_boundary": on_boundary, "evaluations": len(cache)},
    )


def truncation_check(
    params: ModelParams,
    space: HilbertSpace | None = None,
    *,
    integrator: IntegratorSettings | None = None,
    input_photons: int = 2,
) -> dict[str, float]:
    """
    |Delta P_clk|2| when each truncation is incremented by one in turn.

    :return: A dictionary factor name -> absolute change of the click probability.
    """
    space = space or HilbertSpace()
    reference = fidelity(params, space=space, settings=integrator, input_photons=input_photons)
    changes = {}
    for factor in ("storage_dim", "buffer_dim", "filter_dim"):
        refined = fidelity(
            params,
            space=space.incremented(factor),
            settings=integrator,
            input_photons=input_photons,
        )
        changes[factor] = abs(refined.click_two - reference.click_two)

    return changes

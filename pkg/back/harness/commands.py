"""
Batch commands behind the CLI. Each one reads a validated run configuration,
computes its results and writes CSV grids and JSON summaries to an output directory.
Every file is written from the calling process.
"""

import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from back.detector.models import coupled_resonators as cr
from back.detector.models import detection_fidelity as fid
from back.detector.models import master_equation as me
from back.detector.models import photomultiplier as pm
from back.detector.utils import CouplerVariant, JpmLevel, Label, units
from back.detector.utils.custom_exceptions import DetectorError, NoBarrier
from back.detector.utils.dataframe_operations import (
    export_as_csv,
    export_as_gnuplot,
    export_as_json,
)
from back.harness.schemas import (
    CouplerRunConfig,
    JpmRunConfig,
    SimulateRunConfig,
    SweepRunConfig,
    TablesRunConfig,
)
from config import Config

logger = logging.getLogger(__name__)


def _write_csv(data: pd.DataFrame, out: Path, name: str) -> Path:
    path = out / name
    export_as_csv(data, path=path)

    return path


def _write_json(summary: dict[str, Any], out: Path, name: str) -> Path:
    path = out / name
    export_as_json(summary, path=path)

    return path


def cmd_coupler(config: CouplerRunConfig, out: Path) -> list[Path]:
    """
    Coupler flux maps of E_eff, |g21| and the parity residual, the derived chain at the
    configured fluxes, the odd-parity points and, for a BiSQUID, the coupler-off points.

    :param config: A CouplerRunConfig.
    :param out: Output directory.
    :return: Paths of the written files.
    """
    resonators = config.resonator_pair()
    coupler = config.coupler_spec()
    settings = Config().get_coupler_settings()
    k_max = config.expansion_order()
    newton = cr.NewtonSettings.from_config()
    grid = config.flux_grid
    fluxes = np.linspace(grid.flux_min, grid.flux_max, grid.flux_points)
    fluxes_prime = np.linspace(grid.flux_prime_min, grid.flux_prime_max, grid.flux_prime_points)

    written = [
        _write_csv(
            cr.flux_map(resonators, coupler, fluxes, fluxes_prime, k_max, newton),
            out,
            "coupler_map.csv",
        )
    ]

    summary: dict[str, Any] = {"coupler": coupler.model_dump(mode="json")}
    try:
        derived, coupler_derived, couplings = cr.coupling_set(
            resonators,
            coupler,
            k_max,
            sw_parameter_warning=settings["sw_parameter_warning"],
            newton=newton,
        )
        summary |= {
            "storage": derived[0].to_dict(),
            "buffer": derived[1].to_dict(),
            "coupler_derived": coupler_derived.to_dict(),
            "couplings": couplings.to_dict(),
        }
    except DetectorError as exc:
        summary["error"] = exc.message
    written.append(_write_json(summary, out, "coupler_summary.json"))

    parity: dict[str, Any] = {}
    try:
        parity["odd_parity"] = cr.find_odd_parity_flux(
            coupler,
            resonators,
            scan_points=settings["flux_scan_points"],
            tolerance=settings["parity_tolerance"],
        ).to_dict()
    except DetectorError as exc:
        parity["odd_parity"] = {"error": exc.message}
    locus = []
    for asymmetry in config.locus_asymmetries:
        try:
            point = cr.odd_parity_locus(resonators, coupler, [asymmetry])[0].to_dict()
        except DetectorError as exc:
            point = {"error": exc.message}
        locus.append({"alpha": asymmetry, **point})
    parity["locus"] = locus
    if coupler.variant == CouplerVariant.BI_SQUID:
        parity["off_points"] = []
        for branch in config.off_point_branches:
            try:
                flux, flux_prime = cr.coupler_off_point(coupler, branch)
                parity["off_points"].append(
                    {"n": branch, "phi_c": flux, "phi_c_prime": flux_prime}
                )
            except DetectorError as exc:
                parity["off_points"].append({"n": branch, "error": exc.message})
    written.append(_write_json(parity, out, "odd_parity.json"))

    return written


def _potential_profiles(
    spec: pm.JpmSpec, biases: list[float], points: int, half_width: float
) -> tuple[pd.DataFrame, list[dict[str, Any]]]:
    frames, landscapes = [], []
    for bias in biases:
        biased = spec.with_bias(bias)
        phi = np.linspace(
            biased.external_phase - half_width, biased.external_phase + half_width, points
        )
        frame = pm.potential_profile(biased, phi)
        frame.insert(0, Label.BIAS_FLUX.value, bias)
        frames.append(frame)
        landscapes.append({"bias_flux": bias, **pm.potential_landscape(biased, phi).to_dict()})

    return pd.concat(frames, ignore_index=True), landscapes


def _bare_resonator(spec: cr.ResonatorSpec) -> cr.ResonatorDerived:
    return cr.resonator_derived(
        spec, loaded_capacitance=spec.capacitance, effective_energy=0.0, u2=0.0, u3=0.0
    )


def _level_summary(spectrum: pm.JpmSpectrum) -> dict[str, Any]:
    return {
        "bias_flux": spectrum.spec.bias_flux,
        "states": spectrum.size,
        "label_counts": {label.value: count for label, count in spectrum.label_counts().items()},
        "level_numbers": {
            level.value: spectrum.level_number(level)
            for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F)
        },
        "omega_ge_GHz": units.to_ghz(spectrum.transition_frequency(JpmLevel.E, JpmLevel.G)),
        "omega_ef_GHz": units.to_ghz(spectrum.transition_frequency(JpmLevel.F, JpmLevel.E)),
        "landscape": spectrum.landscape.to_dict(),
    }


def cmd_jpm(config: JpmRunConfig, out: Path) -> list[Path]:
    """
    JPM spectrum with well labels, wavefunction samples, charge matrix magnitudes, the rate
    table and, when configured, dephasing rates and the coupling and drive inversions.
    A single-well bias writes the spectrum and a summary noting the missing barrier.

    :param config: A JpmRunConfig.
    :param out: Output directory.
    :return: Paths of the written files.
    """
    spec = config.jpm_spec()
    settings = config.spectrum_settings()
    profiles, landscapes = _potential_profiles(
        spec, config.profile_biases, config.profile_points, settings.phi_half_width
    )
    written = [_write_csv(profiles, out, "potential_profiles.csv")]

    spectrum = pm.solve_spectrum(spec, **settings.solver_kwargs(spec))
    written.append(_write_csv(spectrum.to_frame(), out, "spectrum.csv"))
    summary: dict[str, Any] = {"jpm": spec.model_dump(), "profiles": landscapes}
    if spectrum.role_map is None:
        summary["error"] = (
            "fewer than two shallow-well states, no g, e, f assignment"
            if spectrum.landscape.is_double_well
            else NoBarrier(spec.bias_flux).message
        )
        summary["landscape"] = spectrum.landscape.to_dict()
        written.append(_write_json(summary, out, "jpm_summary.json"))
        return written

    summary |= _level_summary(spectrum)
    roles = [spectrum.index(level) for level in (JpmLevel.G, JpmLevel.E, JpmLevel.F)]
    written.append(
        _write_csv(
            spectrum.wavefunction_samples(roles, stride=config.wavefunction_stride),
            out,
            "wavefunctions.csv",
        )
    )

    charge = pm.charge_matrix(spectrum)
    written.append(_write_csv(charge.magnitudes().reset_index(), out, "charge_matrix.csv"))
    summary["charge_asymmetry"] = charge.asymmetry

    rates = pm.rate_table(charge, spectrum)
    rate_report: dict[str, Any] = rates.to_dict()
    if config.gamma_eg_mhz is not None and config.kappa_eg_mhz is not None:
        rate_report["absolute_MHz"] = {
            name: units.to_mhz(rate)
            for name, rate in rates.absolute(
                units.from_mhz(config.gamma_eg_mhz), units.from_mhz(config.kappa_eg_mhz)
            ).items()
        }
    written.append(_write_json(rate_report, out, "rate_table.json"))

    if config.dephasing is not None:
        summary["dephasing"] = pm.dephasing_rates(
            spec,
            flux_step=settings.flux_step,
            settings=settings,
            **config.dephasing.solver_kwargs(),
        ).to_dict()

    if config.coupling is not None:
        buffer = _bare_resonator(config.coupling.buffer)
        coupling_report = pm.drive_and_coupling(spec, charge, spectrum, buffer).to_dict()
        if config.coupling.coupling_mhz is not None:
            coupling_report["C_G_fF"] = 1e15 * pm.solve_coupling_capacitance(
                spec, charge, spectrum, buffer, units.from_mhz(config.coupling.coupling_mhz)
            )
        if config.coupling.drive_mhz is not None:
            coupling_report["effective_drive_voltage_V"] = pm.drive_amplitude_for(
                charge, spectrum, units.from_mhz(config.coupling.drive_mhz)
            )
        summary["coupling"] = coupling_report

    written.append(_write_json(summary, out, "jpm_summary.json"))

    return written


def cmd_simulate(
    config: SimulateRunConfig, out: Path, *, integrator: me.IntegratorSettings | None = None
) -> list[Path]:
    """
    Evolve one input state over the capture window; write the trajectory and a summary
    with the final-state diagnostics and click probabilities. P_clk|2 and F are reported
    for inputs of two photons or more only.

    :param config: A SimulateRunConfig.
    :param out: Output directory.
    :param integrator: Integrator settings.
    :return: Paths of the written files.
    """
    settings = config.detector_settings()
    params = settings.to_model_params()
    space = config.hilbert_space()
    flags = params.resonance_flags()
    if not all(flags.values()):
        logger.info("Off-resonant run: %s", flags)

    result = me.capture_trajectory(
        params, space, input_photons=config.input_photons, settings=integrator
    )
    dark = me.false_click_probability(params.sink_g, params.capture_time, params.efficiency)
    summary: dict[str, Any] = {
        "settings": settings.model_dump(),
        "truncation": list(space.dimensions),
        "input_photons": config.input_photons,
        "resonance": flags,
        "final_state": result.summary(),
        "P_dark": dark,
        "P_click_simulated": me.click_probability(
            result.final_state, params.efficiency, space=space
        ),
    }
    if config.input_photons >= 2:
        click_two = summary["P_click_simulated"]
        summary["P_clk2"] = click_two
        summary["F"] = fid.discrimination_fidelity({2: click_two, 1: dark, 0: dark})
    if config.check_truncation and config.input_photons >= 2:
        summary["truncation_check"] = fid.truncation_check(
            params, space, integrator=integrator, input_photons=config.input_photons
        )

    trajectory = result.traces
    return [
        _write_csv(trajectory, out, "trajectory.csv"),
        _write_json(summary, out, "simulation.json"),
    ]


def cmd_sweep(
    config: SweepRunConfig,
    out: Path,
    *,
    integrator: me.IntegratorSettings | None = None,
    workers: int = 1,
) -> list[Path]:
    """
    Fidelity map over one or two axes, its argmax summary, a sidecar log of failed
    cells and optionally the optimum found by `optimize` from the same baseline.

    :param config: A SweepRunConfig.
    :param out: Output directory.
    :param integrator: Integrator settings.
    :param workers: Worker processes.
    :return: Paths of the written files.
    """
    spec = config.sweep_spec()
    space = config.hilbert_space()
    fidelity_map = fid.sweep(spec, workers=workers, space=space, integrator=integrator)
    frame = fidelity_map.to_frame()
    if config.layout == "gnuplot":
        written = [out / "fidelity_map.dat"]
        export_as_gnuplot(frame, block_column=Label.AXIS_1.value, path=written[0])
    else:
        written = [_write_csv(frame, out, "fidelity_map.csv")]

    summary = fidelity_map.summary(spec.baseline)
    if config.compare_optimum:
        sweep_settings = Config().get_sweep_settings()
        optimum = fid.optimize(
            spec.baseline,
            bounds=fid.default_bounds(
                spec.baseline,
                g21_fraction=spec.rwa_g21_fraction,
                drive_fraction=spec.rwa_drive_fraction,
            ),
            coarse_points=sweep_settings["coarse_points"],
            tolerance=sweep_settings["refinement_tolerance"],
            max_steps=sweep_settings["max_refinement_steps"],
            space=space,
            integrator=integrator,
            input_photons=spec.input_photons,
            workers=workers,
        )
        summary["optimum"] = optimum.to_dict()
    written.append(_write_json(summary, out, "sweep.json"))

    failures = out / "failed_cells.log"
    failures.write_text(
        "".join(
            f"{point.parameters} {point.status}\n" for point in fidelity_map.failed
        ),
        encoding="utf-8",
    )
    written.append(failures)

    return written


def _table_i(spec: pm.JpmSpec) -> dict[str, Any]:
    storage, buffer = cr.ResonatorSpec.pair_from_config()
    coupler = cr.CouplerSpec.from_config()

    return {
        "coupler": {"E_J_GHz": units.to_ghz(coupler.josephson_energy)},
        "storage": _bare_resonator(storage).to_dict(),
        "buffer": _bare_resonator(buffer).to_dict(),
        "jpm": {
            "E_J_GHz": units.to_ghz(spec.josephson_energy),
            "E_L_GHz": units.to_ghz(spec.inductive_energy),
            "E_C_MHz": units.to_mhz(spec.capacitive_energy),
            "E_C_loaded_MHz": units.to_mhz(spec.loaded_capacitive_energy),
        },
    }


def cmd_tables(
    config: TablesRunConfig,
    out: Path,
    *,
    integrator: me.IntegratorSettings | None = None,
) -> list[Path]:
    """
    Regenerate the circuit energies, the JPM rate ratios with level assignment and
    dephasing rates, and the fidelities of the named parameter sets.

    :param config: A TablesRunConfig.
    :param out: Output directory.
    :param integrator: Integrator settings.
    :return: Paths of the written files.
    """
    spec = config.jpm or pm.JpmSpec.from_config()
    settings = config.spectrum or pm.SpectrumSettings.from_config()
    dephasing = config.dephasing or pm.DephasingSettings.from_config()
    written = [_write_json(_table_i(spec), out, "table_i.json")]

    spectrum = pm.solve_spectrum(spec, **settings.solver_kwargs(spec))
    charge = pm.charge_matrix(spectrum)
    table_ii = {
        **_level_summary(spectrum),
        "ratios": pm.rate_table(charge, spectrum).to_dict(),
        "dephasing": pm.dephasing_rates(
            spec, flux_step=settings.flux_step, settings=settings, **dephasing.solver_kwargs()
        ).to_dict(),
    }
    written.append(_write_json(table_ii, out, "table_ii.json"))

    table_iii: dict[str, Any] = {}
    space = config.truncation or me.HilbertSpace.from_config()
    for name in config.parameter_sets:
        detector = me.DetectorSettings.from_config(name)
        params = detector.to_model_params()
        entry: dict[str, Any] = {"settings": detector.model_dump()}
        entry["rwa"] = pm.rwa_validity(
            charge,
            spectrum,
            two_photon=params.two_photon,
            coupling_strength=params.jpm_coupling,
            drive_strength=params.drive_strength,
            omega_1=params.omega_1,
            omega_2=params.omega_2,
        )
        if config.include_fidelity:
            point = fid.fidelity(params, space=space, settings=integrator)
            entry |= {
                "P_clk2": point.click_two,
                "P_dark": point.dark_count,
                "F": point.fidelity,
                "F_percent": round(100 * point.fidelity, 2) if not math.isnan(point.fidelity) else None,
            }
        table_iii[name] = entry
    written.append(_write_json(table_iii, out, "table_iii.json"))

    return written

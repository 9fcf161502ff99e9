#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Command-line front end of the detector engine: one subcommand per reproduction recipe.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical failure.
"""

import logging
import sys
from pathlib import Path

import click

from back.detector.utils import Subcommand
from back.detector.utils.custom_exceptions import ConfigError, DetectorError

EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def _configure_logging(verbose: bool):
    from config import Config

    config = Config()
    logging.basicConfig(
        level=logging.DEBUG if verbose else config.get_log_level(),
        format=config.get_log_format(),
        force=True,
    )


def _run(ctx: click.Context, subcommand: Subcommand, config_path: Path, out: Path):
    from back.detector.models.master_equation import IntegratorSettings
    from back.harness import commands, schemas
    from config import Config

    options = ctx.obj
    schema, command = {
        Subcommand.COUPLER: (schemas.CouplerRunConfig, commands.cmd_coupler),
        Subcommand.JPM: (schemas.JpmRunConfig, commands.cmd_jpm),
        Subcommand.SIMULATE: (schemas.SimulateRunConfig, commands.cmd_simulate),
        Subcommand.SWEEP: (schemas.SweepRunConfig, commands.cmd_sweep),
        Subcommand.TABLES: (schemas.TablesRunConfig, commands.cmd_tables),
    }[subcommand]
    logger = logging.getLogger("run")

    try:
        run_config = schemas.load_run_config(config_path, schema)
        out.mkdir(parents=True, exist_ok=True)
        tolerances = {
            key: value
            for key, value in (("rtol", options["tol_rel"]), ("atol", options["tol_abs"]))
            if value is not None
        }
        integrator = IntegratorSettings.from_config(**tolerances)
        workers = options["threads"] or Config().get_worker_count()

        match subcommand:
            case Subcommand.SIMULATE | Subcommand.TABLES:
                written = command(run_config, out, integrator=integrator)
            case Subcommand.SWEEP:
                written = command(run_config, out, integrator=integrator, workers=workers)
            case _:
                written = command(run_config, out)
    except (ConfigError, OSError) as exc:
        click.echo(f"Configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except DetectorError as exc:
        click.echo(f"Numerical failure ({type(exc).__name__}): {exc.message}", err=True)
        sys.exit(EXIT_NUMERICAL_FAILURE)

    for path in written:
        logger.info("Wrote %s", path)


def _subcommand_options(function):
    function = click.pass_context(function)
    function = click.option(
        "--out",
        "-o",
        type=click.Path(file_okay=False, path_type=Path),
        required=True,
        help="Output directory, created if missing.",
    )(function)
    function = click.option(
        "--config",
        "-c",
        "config_path",
        type=click.Path(dir_okay=False, path_type=Path),
        required=True,
        help="JSON run configuration.",
    )(function)

    return function


@click.group()
@click.option("--threads", "-t", type=click.IntRange(min=1), help="Worker processes for sweeps.")
@click.option(
    "--tol-rel",
    type=click.FloatRange(min=0, min_open=True),
    help="Integrator relative tolerance.",
)
@click.option(
    "--tol-abs",
    type=click.FloatRange(min=0, min_open=True),
    help="Integrator absolute tolerance.",
)
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level.")
@click.pass_context
def run(
    ctx: click.Context,
    threads: int | None,
    tol_rel: float | None,
    tol_abs: float | None,
    verbose: bool,
):
    ctx.obj = {"threads": threads, "tol_rel": tol_rel, "tol_abs": tol_abs}
    _configure_logging(verbose)


@run.command(name=Subcommand.COUPLER.value)
@_subcommand_options
def coupler(ctx: click.Context, config_path: Path, out: Path):
    """Coupler flux maps, odd-parity points and coupler-off points."""
    _run(ctx, Subcommand.COUPLER, config_path, out)


@run.command(name=Subcommand.JPM.value)
@_subcommand_options
def jpm(ctx: click.Context, config_path: Path, out: Path):
    """JPM spectrum, charge matrix and relaxation rate table."""
    _run(ctx, Subcommand.JPM, config_path, out)


@run.command(name=Subcommand.SIMULATE.value)
@_subcommand_options
def simulate(ctx: click.Context, config_path: Path, out: Path):
    """Master-equation trajectory and click probabilities."""
    _run(ctx, Subcommand.SIMULATE, config_path, out)


@run.command(name=Subcommand.SWEEP.value)
@_subcommand_options
def sweep(ctx: click.Context, config_path: Path, out: Path):
    """Detection fidelity map over one or two parameters."""
    _run(ctx, Subcommand.SWEEP, config_path, out)


@run.command(name=Subcommand.TABLES.value)
@_subcommand_options
def tables(ctx: click.Context, config_path: Path, out: Path):
    """Circuit energies, rate ratios and parameter-set fidelities."""
    _run(ctx, Subcommand.TABLES, config_path, out)


if __name__ == "__main__":
    run()

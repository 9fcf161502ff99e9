import json

import numpy as np
from click.testing import CliRunner
from scipy.sparse import linalg as sparse_linalg

from back.detector.models import master_equation as me
from back.detector.models import photomultiplier as pm
from run import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_FAILURE, run

SMALL_SIMULATION = {
    "parameter_set": "A",
    "settings": {"capture_time_ns": 5.0},
    "truncation": {"storage_dim": 3, "buffer_dim": 2, "filter_dim": 2},
}


def _invoke(tmp_path, subcommand: str, data: dict | None, *options: str):
    config = tmp_path / "run.json"
    if data is not None:
        config.write_text(json.dumps(data), encoding="utf-8")

    return CliRunner().invoke(
        run, [*options, subcommand, "--config", str(config), "--out", str(tmp_path / "out")]
    )


class TestRun:
    @staticmethod
    def test_missing_config(tmp_path):
        result = _invoke(tmp_path, "simulate", None)

        assert result.exit_code == EXIT_CONFIG_ERROR

    @staticmethod
    def test_unknown_key(tmp_path):
        result = _invoke(tmp_path, "simulate", SMALL_SIMULATION | {"photons": 2})

        assert result.exit_code == EXIT_CONFIG_ERROR
        assert not (tmp_path / "out").exists()

    @staticmethod
    def test_numerical_failure(tmp_path):
        data = {"spectrum": {"grid_points": 1001, "phi_half_width": 0.5}, "profile_points": 11}

        result = _invoke(tmp_path, "jpm", data)

        assert result.exit_code == EXIT_NUMERICAL_FAILURE

    @staticmethod
    def test_unknown_subcommand(tmp_path):
        result = _invoke(tmp_path, "plot", SMALL_SIMULATION)

        assert result.exit_code != 0

    @staticmethod
    def test_simulate(tmp_path):
        result = _invoke(tmp_path, "simulate", SMALL_SIMULATION, "--tol-rel", "1e-7")

        assert result.exit_code == 0
        assert (tmp_path / "out" / "trajectory.csv").is_file()
        assert (tmp_path / "out" / "simulation.json").is_file()

    @staticmethod
    def test_invalid_tolerance(tmp_path):
        result = _invoke(tmp_path, "simulate", SMALL_SIMULATION, "--tol-abs", "0")

        assert result.exit_code == 2

    @staticmethod
    def test_eigensolver_failure(tmp_path, monkeypatch):
        def stalled(*_, **__):
            raise sparse_linalg.ArpackNoConvergence(
                "ARPACK error -1: No convergence", np.array([]), np.array([])
            )

        monkeypatch.setattr(pm.sparse_linalg, "eigsh", stalled)

        result = _invoke(tmp_path, "jpm", {"profile_points": 11})

        assert result.exit_code == EXIT_NUMERICAL_FAILURE

    @staticmethod
    def test_singular_integrator_step(tmp_path, monkeypatch):
        def singular(*_, **__):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr(me, "solve_ivp", singular)

        result = _invoke(tmp_path, "simulate", SMALL_SIMULATION)

        assert result.exit_code == EXIT_NUMERICAL_FAILURE

"""
Provides functions parsing the YAML Configuration file to retrieve parameters.
"""

from typing import Any

from yaml import safe_load, parser  # type: ignore


class Config:
    """
    Provides function to retrieve and/or build fields from YAML Configuration.
    It needs to be instantiated first to be loaded.
    """

    def __init__(self, path="config.yml"):
        self.path = path
        try:
            with open(self.path, mode="rt", encoding="utf-8") as stream:
                self.yaml_config: dict = safe_load(stream)
        except FileNotFoundError as exc:
            raise FileNotFoundError(
                f'Configuration file not found at "{self.path}"'
            ) from exc
        except parser.ParserError as exc:
            raise parser.ParserError(
                f'Configuration file at "{self.path}" cannot be parsed: not a valid YAML file!'
            ) from exc

    def get_log_level(self) -> str:
        """
        The logging level name, e.g. 'INFO'.

        :return: A level name as a String.
        """

        return self.yaml_config["logging"]["level"]

    def get_log_format(self) -> str:
        return self.yaml_config["logging"]["format"]

    def get_coupler_settings(self) -> dict[str, Any]:
        """
        Return coupler solver settings.

        ex:
        {
            "k_max": 6,
            "sw_parameter_warning": 0.1,
            "newton_max_iterations": 100,
            "newton_tolerance": 1e-12,
            "parity_tolerance": 1e-10,
            "flux_scan_points": 257
        }
        """

        return {
            key: value
            for key, value in self.yaml_config["coupler"].items()
            if key not in ("circuit", "resonators")
        }

    def get_resonators(self) -> list[dict[str, float]]:
        """
        Return the storage and buffer resonator circuits, in that order.

        :return: A list of two dictionaries with capacitance (F) and inductance (H).
        """

        return self.yaml_config["coupler"]["resonators"]

    def get_coupler_circuit(self) -> dict[str, Any]:
        """
        Return the default coupler: variant, critical current (A) and asymmetry alpha.
        """

        return self.yaml_config["coupler"]["circuit"]

    def get_grid_settings(self) -> dict[str, Any]:
        """
        Return JPM eigensolver settings (grid, stencil, retention, checks).

        ex:
        {
            "grid_points": 8001,
            "phi_half_width": 6.0,
            "stencil_order": 8,
            ...
        }
        """

        return {
            key: value
            for key, value in self.yaml_config["jpm"].items()
            if key != "circuit"
        }

    def get_jpm_circuit(self) -> dict[str, float]:
        """
        Return the default JPM circuit: critical current (A), loop inductance (H),
        capacitance (F) and bias flux (Phi_0).
        """

        return self.yaml_config["jpm"]["circuit"]

    def get_dephasing_settings(self) -> dict[str, Any]:
        """
        Return flux-noise dephasing settings.

        :return: A dictionary with noise amplitude (Phi_0), cutoff (Hz) and fixed-point settings.
        """

        return self.yaml_config["dephasing"]

    def get_solver_tolerances(self) -> dict[str, Any]:
        """
        Return master-equation integrator settings.

        ex:
        {
            "method": "DOP853",
            "rtol": 1e-8,
            "atol": 1e-10,
            "trace_tolerance": 1e-7,
            "output_points": 101
        }
        """

        return self.yaml_config["integrator"]

    def get_truncation(self) -> dict[str, int]:
        """
        Return default Fock-space truncations of the storage, buffer and filter modes.

        :return: A dictionary with keys 'storage', 'buffer', 'filter'.
        """

        return self.yaml_config["truncation"]

    def get_sweep_settings(self) -> dict[str, Any]:
        """
        Return fidelity sweep and optimization settings.

        :return: A dictionary of sweep settings.
        """

        return self.yaml_config["sweep"]

    def get_worker_count(self) -> int:
        """
        The number of worker processes used by sweeps.

        :return: A number of workers as an Integer.
        """

        return self.yaml_config["sweep"]["workers"]

    def get_parameter_set(self, name: str) -> dict[str, float]:
        """
        Return a named set of detector parameters in human units (GHz, MHz, kHz, ns).

        :param name: Name of the set, e.g. 'A' or 'B'.
        :return: A dictionary of parameter values.
        :raise KeyError: If the set is not declared.
        """
        parameter_sets = self.yaml_config["parameter_sets"]
        if name not in parameter_sets:
            raise KeyError(
                f"Unknown parameter set {name!r}, should be one of {list(parameter_sets)}."
            )

        return dict(parameter_sets[name])

import json

from pytest import raises

from back.detector.models.master_equation import HilbertSpace
from back.detector.utils.custom_exceptions import ConfigError
from back.harness.schemas import (
    CouplerRunConfig,
    JpmRunConfig,
    SimulateRunConfig,
    SweepRunConfig,
    TablesRunConfig,
    load_run_config,
)

SWEEP_CONFIG = {
    "parameter_set": "A",
    "axes": [{"name": "g21_mhz", "minimum": 5.0, "maximum": 250.0, "points": 3}],
}


def _write(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")

    return path


class TestLoadRunConfig:
    @staticmethod
    def test_missing_file(tmp_path):
        with raises(FileNotFoundError):
            load_run_config(tmp_path / "absent.json", SimulateRunConfig)

    @staticmethod
    def test_invalid_json_reports_line(tmp_path):
        path = _write(tmp_path, '{\n  "parameter_set": "A",\n  oops\n}')

        with raises(ConfigError) as error:
            load_run_config(path, SimulateRunConfig)

        assert "line 3" in error.value.message

    @staticmethod
    def test_unknown_key(tmp_path):
        path = _write(tmp_path, {"parameter_set": "A", "photons": 2})

        with raises(ConfigError) as error:
            load_run_config(path, SimulateRunConfig)

        assert "photons" in error.value.details

    @staticmethod
    def test_unknown_parameter_set(tmp_path):
        path = _write(tmp_path, {"parameter_set": "Z"})

        with raises(ConfigError):
            load_run_config(path, SimulateRunConfig)

    @staticmethod
    def test_settings_are_validated(tmp_path):
        path = _write(tmp_path, {"settings": {"capture_time_ns": 500.0}})

        with raises(ConfigError):
            load_run_config(path, SimulateRunConfig)

    @staticmethod
    def test_sweep_beyond_rotating_wave_guard(tmp_path):
        data = SWEEP_CONFIG | {
            "axes": [{"name": "g21_mhz", "minimum": 5.0, "maximum": 400.0, "points": 3}]
        }

        with raises(ConfigError):
            load_run_config(_write(tmp_path, data), SweepRunConfig)

    @staticmethod
    def test_sweep_layout(tmp_path):
        with raises(ConfigError):
            load_run_config(_write(tmp_path, SWEEP_CONFIG | {"layout": "xlsx"}), SweepRunConfig)

    @staticmethod
    def test_sweep_needs_axes(tmp_path):
        with raises(ConfigError):
            load_run_config(_write(tmp_path, {"parameter_set": "A"}), SweepRunConfig)

    @staticmethod
    def test_sweep(tmp_path):
        config = load_run_config(_write(tmp_path, SWEEP_CONFIG), SweepRunConfig)
        spec = config.sweep_spec()

        assert spec.axis_names == ("g21_mhz",)
        assert spec.baseline.g21_mhz == 20.4
        assert spec.input_photons == 2
        assert config.layout == "csv"


class TestDefaults:
    @staticmethod
    def test_simulate():
        config = SimulateRunConfig()

        assert config.detector_settings().capture_time_ns == 50.0
        assert config.hilbert_space() == HilbertSpace(storage_dim=5, buffer_dim=3, filter_dim=3)
        assert config.input_photons == 2

    @staticmethod
    def test_simulate_overrides():
        config = SimulateRunConfig(parameter_set="B", settings={"efficiency": 0.5})

        assert config.detector_settings().efficiency == 0.5
        assert config.detector_settings().g21_mhz == 24.4

    @staticmethod
    def test_coupler():
        config = CouplerRunConfig()
        storage, buffer = config.resonator_pair()

        assert storage.capacitance == 1.0e-12
        assert buffer.inductance == 5.0e-10
        assert config.coupler_spec().asymmetry == 0.5
        assert config.flux_grid.flux_points == 101
        assert config.expansion_order() == 6
        assert CouplerRunConfig(k_max=4).expansion_order() == 4

    @staticmethod
    def test_jpm():
        config = JpmRunConfig()

        assert config.jpm_spec().bias_flux == 0.6316
        assert config.spectrum_settings().grid_points == 8001
        assert config.coupling is None

    @staticmethod
    def test_tables():
        config = TablesRunConfig()

        assert config.parameter_sets == ["A", "B"]
        assert config.include_fidelity

    @staticmethod
    def test_tables_unknown_parameter_set():
        with raises(KeyError):
            TablesRunConfig(parameter_sets=["A", "Z"])

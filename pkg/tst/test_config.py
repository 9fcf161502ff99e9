from pytest import raises
from yaml.parser import ParserError  # type: ignore

from config import Config

config = Config()


class TestConfig:
    @staticmethod
    def test_config_file_not_found():
        with raises(FileNotFoundError):
            Config(path="/there/is/no/config/file/there/dude.yaml")

    @staticmethod
    def test_config_file_invalid(tmp_path):
        path = tmp_path / "broken.yml"
        path.write_text("jpm: [unclosed\n", encoding="utf-8")

        with raises(ParserError):
            Config(path=str(path))

    @staticmethod
    def test_get_log_level():
        assert config.get_log_level() in {"DEBUG", "INFO", "WARNING", "ERROR"}

    @staticmethod
    def test_get_coupler_settings():
        settings = config.get_coupler_settings()

        assert isinstance(settings, dict)
        assert "circuit" not in settings and "resonators" not in settings
        assert settings["k_max"] >= 3
        assert settings["newton_max_iterations"] > 0
        assert settings["newton_tolerance"] > 0

    @staticmethod
    def test_get_resonators():
        resonators = config.get_resonators()

        assert len(resonators) == 2
        for resonator in resonators:
            assert resonator.keys() == {"capacitance", "inductance"}

    @staticmethod
    def test_get_coupler_circuit():
        circuit = config.get_coupler_circuit()

        assert circuit["variant"] in {"AsymmetricSquid", "BiSquid"}
        assert circuit["critical_current"] > 0

    @staticmethod
    def test_get_grid_settings():
        settings = config.get_grid_settings()

        assert "circuit" not in settings
        assert settings["grid_points"] >= 1001

    @staticmethod
    def test_get_jpm_circuit():
        circuit = config.get_jpm_circuit()

        assert circuit.keys() == {
            "critical_current",
            "loop_inductance",
            "capacitance",
            "bias_flux",
        }

    @staticmethod
    def test_get_dephasing_settings():
        settings = config.get_dephasing_settings()

        assert settings["flux_noise_amplitude"] == 1e-6

    @staticmethod
    def test_get_solver_tolerances():
        tolerances = config.get_solver_tolerances()

        assert tolerances["rtol"] == 1e-8
        assert tolerances["atol"] == 1e-10

    @staticmethod
    def test_get_truncation():
        assert config.get_truncation() == {"storage": 5, "buffer": 3, "filter": 3}

    @staticmethod
    def test_get_sweep_settings():
        settings = config.get_sweep_settings()

        assert settings["rwa_g21_fraction"] == 0.05
        assert settings["rwa_drive_fraction"] == 0.2
        assert "max_capture_time_ns" not in settings

    @staticmethod
    def test_get_worker_count():
        workers = config.get_worker_count()

        assert isinstance(workers, int)
        assert workers >= 1

    @staticmethod
    def test_get_parameter_set():
        parameter_set = config.get_parameter_set("A")

        assert parameter_set["g21_mhz"] == 20.4
        assert parameter_set["capture_time_ns"] == 50.0

    @staticmethod
    def test_get_parameter_set_fails_because_unknown():
        with raises(KeyError):
            config.get_parameter_set("Z")

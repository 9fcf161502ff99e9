from back.detector.utils.custom_exceptions import (
    BoundaryLeak,
    BoxTooSmall,
    ConfigError,
    DetectorError,
    NegativeRate,
    NoBarrier,
    NoConvergence,
    PreconditionViolated,
    ToleranceNotMet,
)


def test_numerical_errors_share_a_base():
    errors = [
        PreconditionViolated("solve_spectrum", "grid_points >= 1001"),
        NoConvergence("Newton", 100, 1e-3),
        BoundaryLeak(12, 1e-6, (-1.0, 1.0)),
        NoBarrier(0.0),
        NegativeRate("loss_1", -1.0),
        ToleranceNotMet("trace", 1e-5, 1e-7),
        BoxTooSmall({"g21_mhz": 1.0}),
    ]

    for error in errors:
        assert isinstance(error, DetectorError)
        assert isinstance(error.message, str)
        assert str(error) == error.message


def test_messages_carry_context():
    assert "Level 12" in BoundaryLeak(12, 1e-6, (-1.0, 1.0)).message
    assert "loss_1" in NegativeRate("loss_1", -1.0).message
    assert PreconditionViolated("optimize", "a box").message == "optimize requires a box."


def test_config_error_is_not_numerical():
    error = ConfigError("run.json", "axes: field required")

    assert not isinstance(error, DetectorError)
    assert error.message == 'Configuration "run.json" is invalid: axes: field required'

"""
Provides custom Exceptions to be used within the project.
Raise them or catch them!

Every numerical failure inherits from DetectorError so that callers
can tell a bad configuration apart from a failed computation.
"""


class DetectorError(Exception):
    """
    Base Exception for numerical failures of the detector engine.
    """

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class PreconditionViolated(DetectorError):
    """
    Raised when an operation is called outside its domain of validity.
    """

    def __init__(self, operation: str, condition: str):
        self.operation = operation
        self.condition = condition
        super().__init__(f"{operation} requires {condition}.")


class NoConvergence(DetectorError):
    """
    Raised when an iterative root-finder exhausts its iteration budget.
    """

    def __init__(self, solver: str, iterations: int, residual: float):
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{solver} did not converge after {iterations} iterations (residual={residual:.3e})."
        )


class NoRoot(DetectorError):
    """
    Raised when a target value is never reached on a search interval.
    """

    def __init__(self, quantity: str, interval: tuple[float, float]):
        self.quantity = quantity
        self.interval = interval
        super().__init__(f"No root of {quantity} found on [{interval[0]}, {interval[1]}).")


class NotConverged(DetectorError):
    """
    Raised when refining a discretization changes results beyond tolerance.
    """

    def __init__(self, grid_points: int, relative_change: float, tolerance: float):
        self.grid_points = grid_points
        self.relative_change = relative_change
        self.tolerance = tolerance
        super().__init__(
            f"Spectrum on {grid_points} grid points is not converged: "
            f"doubling the grid changes eigenvalues by {relative_change:.3e} (tolerance {tolerance:.1e})."
        )


class BoundaryLeak(DetectorError):
    """
    Raised when a retained wavefunction has non-negligible weight at the grid boundary.
    """

    def __init__(self, level: int, boundary_density: float, phi_range: tuple[float, float]):
        self.level = level
        self.boundary_density = boundary_density
        self.phi_range = phi_range
        super().__init__(
            f"Level {level} has boundary density {boundary_density:.3e} on "
            f"phi in [{phi_range[0]:.3f}, {phi_range[1]:.3f}]: widen the grid."
        )


class NoBarrier(DetectorError):
    """
    Raised when the JPM potential is single-welled at the given bias flux.
    """

    def __init__(self, bias_flux: float):
        self.bias_flux = bias_flux
        super().__init__(f"JPM potential at bias flux {bias_flux} Phi_0 has a single well.")


class DegenerateAnchor(DetectorError):
    """
    Raised when the g-e charge matrix element used as rate anchor vanishes.
    """

    def __init__(self, anchor: float):
        self.anchor = anchor
        super().__init__(f"|m_ge| = {anchor:.3e} is too small to anchor relaxation ratios.")


class FixedPointDiverged(DetectorError):
    """
    Raised when the self-consistent dephasing factor iteration fails.
    The last iterate is kept for diagnostics.
    """

    def __init__(self, level: str, last_iterate: float):
        self.level = level
        self.last_iterate = last_iterate
        super().__init__(
            f"Dephasing factor fixed point for level {level} diverged (last zeta={last_iterate:.6g})."
        )


class DimensionMismatch(DetectorError):
    """
    Raised when operators or states do not share the composite Hilbert space dimension.
    """

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected dimension {expected}, got {actual}.")


class NegativeRate(DetectorError):
    """
    Raised when a dissipation channel is given a negative rate.
    """

    def __init__(self, channel: str, rate: float):
        self.channel = channel
        self.rate = rate
        super().__init__(f"Channel {channel} has negative rate {rate:.6g} rad/s.")


class StepFailure(DetectorError):
    """
    Raised when the adaptive integrator cannot take a step.
    """

    def __init__(self, time: float, reason: str):
        self.time = time
        self.reason = reason
        super().__init__(f"Integrator failed at t={time:.6g} s: {reason}")


class ToleranceNotMet(DetectorError):
    """
    Raised when an integrated state drifts beyond its conservation tolerance.
    """

    def __init__(self, quantity: str, error: float, tolerance: float):
        self.quantity = quantity
        self.error = error
        self.tolerance = tolerance
        super().__init__(f"{quantity} error {error:.3e} exceeds tolerance {tolerance:.1e}.")


class BoxTooSmall(DetectorError):
    """
    Describes an optimum found on the boundary of its search box.
    Reported through logs and result metadata rather than raised.
    """

    def __init__(self, parameters: dict[str, float]):
        self.parameters = parameters
        super().__init__(f"Optimum {parameters} lies on the search box boundary.")


class ConfigError(Exception):
    """
    Customizable Exception for run configurations that cannot be used.
    """

    def __init__(self, source: str, details: str):
        self.source = source
        self.details = details
        self.message = f'Configuration "{source}" is invalid: {details}'
        super().__init__(self.message)

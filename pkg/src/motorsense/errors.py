"""Exception types shared across the package."""


class MotorSenseError(Exception):
    """Base class for all motorsense errors."""


class CalibrationError(MotorSenseError):
    """Raised when a parameter calibration target set is infeasible."""


class ConvergenceError(MotorSenseError):
    """Raised when an iterative solver exhausts its iteration budget."""


class IntegrationError(MotorSenseError):
    """Raised when the ODE integrator cannot continue (step underflow,
    non-finite state). The message includes the simulation time of failure."""


class DegenerateChannelError(MotorSenseError):
    """Raised when a scaler is fit on a channel with zero spread."""


class StageError(MotorSenseError):
    """Raised by the CLI when an upstream pipeline artifact is missing."""

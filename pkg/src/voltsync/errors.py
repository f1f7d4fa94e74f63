"""Exception hierarchy.

``ConfigError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class VoltsyncError(Exception):
    pass


class ConfigError(VoltsyncError):
    pass


class NumericalError(VoltsyncError):
    pass


class ModelValidationError(ConfigError, ValueError):
    pass


class NonSymmetricSusceptance(ModelValidationError):
    pass


class NonPositiveTimeConstant(ModelValidationError):
    pass


class NegativeGain(ModelValidationError):
    pass


class DimensionMismatch(ModelValidationError):
    pass


class InvalidTopology(ConfigError, ValueError):
    pass


class BusEliminationSingular(NumericalError):
    pass


class ZeroControllerTimeConstant(ModelValidationError):
    pass


class InvalidPerturbation(ConfigError, ValueError):
    pass


class ConfigParseError(ConfigError):
    pass


class UnknownPreset(ConfigError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DivergedTrajectory(NumericalError):
    """Raised when a state component leaves the blow-up bound.

    Carries the last finite state and its time so callers can report
    where the run broke down.
    """

    def __init__(self, message, t_last=None, last_state=None, trajectory=None):
        super().__init__(message)
        self.t_last = t_last
        self.last_state = last_state
        self.trajectory = trajectory


class NewtonDiverged(NumericalError):
    pass


class SingularJacobianAtIterate(NumericalError):
    pass


class EigensolverFailure(NumericalError):
    pass


class AsymmetricPInput(NumericalError, ValueError):
    pass


class InsufficientSeriesLength(NumericalError, ValueError):
    pass


class IoFailure(ConfigError, OSError):
    """Output directory or file could not be written."""

"""Exception hierarchy.

Everything raised deliberately by the library derives from
:class:`GridFitError`; the CLI maps :class:`ConfigError` to exit code 2
and every other :class:`GridFitError` to exit code 1.
"""


class GridFitError(Exception):
    pass


class ConfigError(GridFitError, ValueError):
    pass


class DomainError(GridFitError, ValueError):
    """An argument lies outside the operation's domain."""


class InfeasibleOperatingPoint(DomainError):
    pass


class StepSizeError(DomainError):
    pass


class NumericError(GridFitError, ArithmeticError):
    pass


class NumericBlowupError(NumericError):
    def __init__(self, message, pole_radius=None):
        super().__init__(message)
        self.pole_radius = pole_radius


class InsufficientDataError(GridFitError, ValueError):
    pass


class UnidentifiableError(GridFitError, ValueError):
    pass


class UndefinedMetricError(GridFitError, ValueError):
    pass


class NoModelError(GridFitError):
    pass


class PartitionFailure(GridFitError):
    def __init__(self, message, v_range=None):
        super().__init__(message)
        self.v_range = v_range


class DivergenceError(GridFitError):
    def __init__(self, message, worst=None, time_s=None):
        super().__init__(message)
        self.worst = worst
        self.time_s = time_s


class ProfileError(GridFitError, ValueError):
    pass


class ParseError(ProfileError):
    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line


class CoverageError(ProfileError):
    pass


class LimitMismatchError(ConfigError):
    pass


class SearchWarning(UserWarning):
    """Binary search ended on a branch that may not be the intended one."""


class ThresholdWarning(UserWarning):
    """A terminal voltage left the continuous-operation band."""

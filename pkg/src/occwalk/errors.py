"""Exception hierarchy shared by every module of the package."""


class OccupationError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidConfigError(OccupationError, ValueError):
    exit_code = 2


class InvalidWindowError(InvalidConfigError):
    pass


class InvalidCoefficientError(InvalidConfigError):
    pass


class OutOfDomainError(InvalidConfigError):
    pass


class IncompleteModelError(InvalidConfigError):
    pass


class InvalidCoinError(InvalidConfigError):
    pass


class InvalidMeasureError(InvalidConfigError):
    pass


class WindowMismatchError(OccupationError, ValueError):
    exit_code = 2


class EngineGuardError(OccupationError, RuntimeError):
    exit_code = 3


class LightConeError(EngineGuardError):
    pass


class OutputError(OccupationError, OSError):
    exit_code = 4

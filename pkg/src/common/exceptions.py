"""
Custom exceptions for walker-lab.

Provides specific exception types for different error categories.
"""


class WalkerLabError(Exception):
    """Base exception for walker-lab errors."""
    pass


class ConfigError(WalkerLabError):
    """Configuration-related errors, including SimConfig invariant violations."""
    pass


class DomainError(WalkerLabError, ValueError):
    """Argument outside the domain of a function (negative Bessel argument, gamma_m >= gamma_F...)."""
    pass


class SimulationError(WalkerLabError):
    """The bounce map left the representable range (non-finite state)."""
    pass


class CalibrationError(WalkerLabError):
    """Kick calibration could not reach the requested walking speed."""

    def __init__(self, message: str, target_speed: float | None = None, kick_max: float | None = None):
        super().__init__(message)
        self.target_speed = target_speed
        self.kick_max = kick_max


class AnalysisError(WalkerLabError):
    """Trajectory analysis errors (empty input, too few samples...)."""
    pass


class FitError(AnalysisError):
    """Curve fit did not converge within its iteration cap."""
    pass


class StorageError(WalkerLabError):
    """File storage errors."""
    pass


class MalformedFileError(StorageError):
    """A trajectory or record file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line_number: int | None = None):
        location = f"{path}:{line_number}" if path and line_number else (path or "")
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.line_number = line_number


class UsageError(WalkerLabError):
    """Command-line usage errors (exit code 2)."""
    pass

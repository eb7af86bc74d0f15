"""Exception types shared across the package."""


class TdhoError(Exception):
    """Base class for all package errors."""


class ConfigError(TdhoError):
    """Malformed or inconsistent run configuration."""


class DomainError(TdhoError):
    """Evaluation requested outside the valid domain of an object."""


class PositivityError(TdhoError):
    """A quantity that must stay positive (mass, chi seed) is not.

    ``t_first_zero`` carries the first offending time when known.
    """

    def __init__(self, message, t_first_zero=None):
        super().__init__(message)
        self.t_first_zero = t_first_zero


class ImaginaryFrequencyError(TdhoError):
    """The attached frequency would be imaginary on part of the domain.

    ``interval`` carries the (t_lo, t_hi) bounds of the offending region.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class PositivityHorizonError(TdhoError):
    """The auxiliary solution chi reached the positivity floor before t_max.

    ``t_star`` is the (estimated) horizon time and ``partial`` the truncated
    solution valid on [0, t_star).
    """

    def __init__(self, message, t_star, partial=None):
        super().__init__(message)
        self.t_star = t_star
        self.partial = partial


class StiffnessError(TdhoError):
    """The adaptive integrator failed to advance."""


class UsageError(TdhoError):
    """An operation was called with arguments violating its contract."""


class GridMismatchError(UsageError):
    """Two grid states with different geometries were combined."""


class BoxOverflowError(TdhoError):
    """Wavefunction support reached the edge of the simulation box."""

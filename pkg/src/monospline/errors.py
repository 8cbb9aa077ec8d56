"""Exception hierarchy shared across the package."""


class MonosplineError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MonosplineError, ValueError):
    """Bad input data: inconsistent dimensions, non-finite entries, ..."""


class DomainError(MonosplineError, ValueError):
    """A time argument falls outside the spline horizon [0, T]."""


class GridSizeError(MonosplineError, RuntimeError):
    """The certified grid would exceed the configured size cap.

    Raised by grid planning when M = ceil(T*r*mu/eps) is larger than the
    cap; increasing eps or decreasing r shrinks the grid.
    """

"""Exception hierarchy shared by all modules."""


class UniqcertError(Exception):
    """Base class for every error raised by this package."""


class GridMismatchError(UniqcertError, ValueError):
    """Two fields (or a field and an operator) live on different grids."""


class ConvergenceError(UniqcertError, RuntimeError):
    """An iterative method hit its iteration cap."""


class NotPositiveDefiniteError(ConvergenceError):
    """Conjugate gradients met a direction of non-positive curvature."""


class ConfigError(UniqcertError, ValueError):
    """A problem configuration failed validation.

    ``errors`` holds every problem found, not just the first one.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class UncertifiedProblemError(UniqcertError):
    """A solve was requested on a problem whose certificate failed."""

"""Exception types shared across the package."""


class BidError(Exception):
    """Base class for package errors."""


class FormatError(BidError, ValueError):
    """A file does not follow the expected on-disk layout."""


class DegenerateError(BidError, ValueError):
    """The input carries too little information for the requested estimate."""


class ConvergenceError(BidError, RuntimeError):
    """The optimizer stopped without meeting its tolerance.

    The best point seen is kept on ``best`` so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

"""Exception types raised across the package."""


class MgsnError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(MgsnError, ValueError):
    pass


class DimensionMismatch(MgsnError, ValueError):
    pass


class EmptyInput(MgsnError, ValueError):
    pass


class OutsideDomain(MgsnError, ValueError):
    """The MGF argument lies outside the region where the series converges."""


class BadIndexSet(MgsnError, ValueError):
    pass


class RankDeficient(MgsnError, ValueError):
    pass


class SeriesUnderflow(MgsnError, ArithmeticError):
    """Every term of a density series underflowed, even in log space."""

    def __init__(self, msg, rows=None):
        super().__init__(msg)
        self.rows = rows


class DegenerateUpdate(MgsnError, ArithmeticError):
    """An M-step produced a covariance that stays singular after jitter."""

    def __init__(self, msg, iteration=None):
        super().__init__(msg)
        self.iteration = iteration


class InvalidParameter(MgsnError, ValueError):
    pass

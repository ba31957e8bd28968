"""Exception types shared across the package."""


class QuasiBayesError(Exception):
    """Base class for package errors."""


class DomainError(QuasiBayesError, ValueError):
    """An observation or parameter lies outside the declared domain."""


class LayoutError(QuasiBayesError, ValueError):
    """Two mixing measures do not share a grid or atom layout."""


class NumericalDomainError(QuasiBayesError, ArithmeticError):
    """A quadrature integrand took a non-finite value."""


class DegenerateEvidenceError(QuasiBayesError, ArithmeticError):
    """The predictive density of an observation is numerically zero."""

    def __init__(self, x, index=None):
        self.x = x
        self.index = index
        where = "" if index is None else f" at index {index}"
        super().__init__(f"predictive density underflows to 0 for x={float(x)!r}{where}")


class UnsupportedScheduleError(QuasiBayesError, ValueError):
    """The weight schedule does not satisfy the hypotheses of the asymptotic results."""

"""Exception hierarchy shared by all metriclab modules."""


class MetricLabError(Exception):
    """Base class for all metriclab errors."""


class StructuralError(MetricLabError, ValueError):
    """Inputs that do not fit together: mismatched dimensions, exponents,
    weights, or index sets that are not contained where they must be."""


class DomainError(MetricLabError, ValueError):
    """A parameter outside the mathematical domain of an operation."""


class RefusalError(DomainError):
    """An instance too large for an exhaustive method (guards combinatorial
    blow-up; the caller should use an estimator instead)."""


class NumericalError(MetricLabError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries ``achieved`` so callers can report how far the solve got.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class PullbackRejectionError(MetricLabError, RuntimeError):
    """The radial precondition of a partition pullback failed.

    ``witness`` is the index of a point at which the preimage of a small
    image ball is not contained in a domain ball of the required radius.
    """

    def __init__(self, message: str, witness: int, achieved: float | None = None):
        super().__init__(message)
        self.witness = witness
        self.achieved = achieved

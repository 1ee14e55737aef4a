"""Exception hierarchy shared by every module."""


class IpwBiasError(Exception):
    """Base class for all package errors."""


class ParameterError(IpwBiasError, ValueError):
    """An argument is outside its valid range or has the wrong shape."""


class DataError(IpwBiasError, ValueError):
    """Response values are invalid for the requested family."""


class RankError(IpwBiasError):
    """The weighted normal equations are singular."""


class ConvergenceError(IpwBiasError):
    """IRLS failed to converge; ``last`` holds the final coefficient iterate."""

    def __init__(self, message, last=None, iterations=0):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class WeightError(IpwBiasError, ValueError):
    """A propensity value of exactly 0 or 1 was supplied to a weighting estimator."""


class DegenerateSampleError(IpwBiasError):
    """A treatment arm is empty, so an arm-specific quantity is undefined."""


class DgpValidityError(IpwBiasError):
    """A data-generating process produced an invalid mean (e.g. non-positive gamma mean)."""


class OverlapError(IpwBiasError):
    """Propensity values come too close to 0 or 1."""


class UnsupportedError(IpwBiasError):
    """The requested computation is not available for this model or distribution."""


class RunAbortedError(IpwBiasError):
    """Too many replications failed for the simulation results to be trusted."""

"""Exception hierarchy shared across the package."""


class DephasingMetrologyError(Exception):
    """Base class for all package errors."""


# --- noise models -----------------------------------------------------------

class NonIntegrableCorrelation(DephasingMetrologyError):
    """2-D quadrature of the correlation function failed to converge."""


class NegativeResult(DephasingMetrologyError):
    """A decay function evaluated negative beyond tolerance (invalid model)."""


class SpectrumUndefined(DephasingMetrologyError):
    """Frequency-domain route requested for a model without a spectrum."""


class DivergentIntegral(DephasingMetrologyError):
    """Spectral integral does not converge for the requested quantity."""


class DivergentMoment(DephasingMetrologyError):
    """Requested spectral moment does not exist for this spectrum."""


class FitAmbiguous(DephasingMetrologyError):
    """Power-law fit residual too large or exponent far from an integer."""


class InvalidParameter(DephasingMetrologyError):
    """A model or query parameter is outside its physical domain."""


# --- state evolution / estimation -------------------------------------------

class DimensionTooLarge(DephasingMetrologyError):
    """Requested probe count exceeds the configured maximum."""


class NotAState(DephasingMetrologyError):
    """Matrix is not a valid density operator (negative eigenvalues)."""


class ZeroSlope(DephasingMetrologyError):
    """Observable expectation carries no first-order signal."""


class InvalidDecay(DephasingMetrologyError):
    """Decay-law exponent outside the supported range."""


# --- phase space -------------------------------------------------------------

class DegenerateSqueezing(DephasingMetrologyError):
    """Quadrature squeezing parameter is non-positive within tolerance."""


class SingularCovariance(DephasingMetrologyError):
    """Covariance matrix is singular or not positive definite."""


class HPViolation(DephasingMetrologyError):
    """Optimal state leaves the low-excitation validity regime."""


# --- control ------------------------------------------------------------------

class QuadratureFailure(DephasingMetrologyError):
    """Segment covariance quadrature did not converge."""


class UnsupportedPulse(DephasingMetrologyError):
    """Pulse descriptor is not a linear collective rotation."""


class IllConditioned(DephasingMetrologyError):
    """Quadratic-form solve rejected due to conditioning."""

    def __init__(self, message: str, condition_number: float | None = None):
        super().__init__(message)
        self.condition_number = condition_number


class RankDeficient(DephasingMetrologyError):
    """Compression matrix does not have full row rank."""


class CombinatorialOverflow(DephasingMetrologyError):
    """Requested enumeration size exceeds the configured cap."""


class ExtrapolationUnstable(DephasingMetrologyError):
    """Short-time extrapolation did not stabilize."""


# --- monte carlo ---------------------------------------------------------------

class CovarianceNotPSD(DephasingMetrologyError):
    """Target covariance is not positive semidefinite."""


class SamplingBudgetExceeded(DephasingMetrologyError):
    """Requested trajectory count exceeds the configured budget."""

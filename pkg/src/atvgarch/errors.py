"""Exception types shared across the package."""


class AtvGarchError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(AtvGarchError, ValueError):
    """A parameter vector or model specification violates its invariants."""


class NonpositiveInterceptError(InvalidParameterError):
    """The time-varying intercept is not strictly positive on [0, 1]."""


class ExplosiveConfigError(InvalidParameterError):
    """Short-run dynamics are nonstationary (ARCH + GARCH weights sum to >= 1)."""


class UnsupportedTransitionOrderError(AtvGarchError, NotImplementedError):
    """Closed-form transition derivatives exist only for a single location."""


class NonfiniteLikelihoodError(AtvGarchError, ArithmeticError):
    """The likelihood is undefined at this parameter point (h <= 0 or overflow)."""


class DegenerateSeriesError(AtvGarchError, ValueError):
    """The input series has zero variance or is otherwise uninformative."""


class NoConvergenceError(AtvGarchError, RuntimeError):
    """The optimizer exhausted its budget without meeting tolerances."""


class SingularMomentMatrixError(AtvGarchError, ValueError):
    """An auxiliary moment matrix is numerically singular."""


class ExcessiveDiscardsError(AtvGarchError, RuntimeError):
    """More than half of the Monte Carlo replications hit the slope bound."""


class InvalidConfigError(AtvGarchError, ValueError):
    """A run configuration contains unknown keys or malformed values."""

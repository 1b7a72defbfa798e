"""Exception hierarchy shared across the package."""


class LevyFwdError(Exception):
    """Base class for all domain errors raised by levyfwd."""


class DomainError(LevyFwdError, ValueError):
    """A cumulant argument left the analyticity strip of the driver."""


class ParameterError(LevyFwdError, ValueError):
    """Invalid model or driver parameters."""


class MalformedFileError(LevyFwdError, ValueError):
    pass


class MissingPillarError(LevyFwdError, KeyError):
    pass


class NonPositiveDiscountError(LevyFwdError, ValueError):
    pass


class DateNotOnGridError(LevyFwdError, KeyError):
    pass


class SpreadNotAboveOneError(LevyFwdError, ValueError):
    """Variant (b) needs every initial multiplicative spread strictly above one."""


class VariantMismatchError(LevyFwdError, ValueError):
    pass


class DegenerateVolatilityError(LevyFwdError, ValueError):
    """Payoff exponents vanish; the caller should use the deterministic price."""


class StripViolationError(LevyFwdError, ValueError):
    """Transform evaluated below the payoff's exponential growth rate."""


class QuadratureNotConvergedError(LevyFwdError, RuntimeError):
    def __init__(self, message, achieved_error=None, u_max=None):
        super().__init__(message)
        self.achieved_error = achieved_error
        self.u_max = u_max


class PriceOutOfBoundsError(LevyFwdError, ValueError):
    pass


class NegativeForwardCapSliceError(LevyFwdError, ValueError):
    pass


class NoFeasibleStartError(LevyFwdError, RuntimeError):
    pass

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConfigurationError(ValueError):
    """A configuration object violates its invariants."""


class DegenerateInputError(ValueError):
    """A correlation statistic has a vanishing denominator."""


class IllConditionedError(RuntimeError):
    """A coefficient extraction would amplify rounding error beyond tolerance."""


class QuadratureError(RuntimeError):
    """Adaptive integration ran out of budget before reaching its tolerance.

    The best available estimate is kept on the exception so callers can still
    report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result

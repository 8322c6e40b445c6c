class ValidationError(ValueError):
    """Invalid parameters (bad quorum sizes, rates, times, ...)."""


class UnsupportedMethodError(ValueError):
    """The requested evaluator does not cover this configuration."""


class NumericalInstabilityError(ArithmeticError):
    """An alternating sum drifted outside the valid range beyond tolerance."""

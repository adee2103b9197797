"""Exception types raised by the solvers and problem builders."""


class ConfigurationError(ValueError):
    """Invalid parameters, incompatible options or missing hooks."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values or failed to converge."""

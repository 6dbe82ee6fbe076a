"""Exception hierarchy shared by every subpackage.

The CLI maps these onto process exit codes (config 2, data 3, numeric 4).
"""


class ContractError(ValueError):
    """A precondition of an operation was violated by the caller."""


class ShapeError(ContractError):
    pass


class ConfigError(ContractError):
    pass


class DataError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class UndefinedRatioError(ContractError):
    """A ratio metric was asked for with an empty denominator."""

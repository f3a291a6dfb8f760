"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and parameter problems
exit 1, file/format problems exit 2, an unreachable privacy budget exits 3.
"""


class IfmsanError(Exception):
    pass


class DimensionError(IfmsanError, ValueError):
    pass


class ParameterError(IfmsanError, ValueError):
    pass


class ConfigError(IfmsanError, ValueError):
    pass


class FormatError(IfmsanError, ValueError):
    pass


class UndefinedRatioError(IfmsanError, ZeroDivisionError):
    pass


class BudgetUnreachable(IfmsanError, RuntimeError):
    """No window size up to the sweep limit met the requested degree of sanitization."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = list(trace)

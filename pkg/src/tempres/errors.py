"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`TempresError`, so callers (and the CLI) can separate bad input from
numerical trouble.
"""


class TempresError(Exception):
    """Base class for all library errors."""


class ConfigError(TempresError, ValueError):
    """Inputs that do not describe a valid system, plan or sweep."""


class NumericalFailure(TempresError, ArithmeticError):
    """A computation could not reach its accuracy or existence guarantee."""


class UnstableSystem(ConfigError):
    pass


class NonPositiveParameter(ConfigError):
    pass


class NonSpdCost(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class NonIntegerGrid(ConfigError):
    pass


class BudgetTooSmall(ConfigError):
    pass


class DegeneratePilot(ConfigError):
    pass


class DivergentTail(ConfigError):
    """Discounted tail or infinite-horizon value does not exist."""


class SingularLyapunov(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class NoRootInInterval(NumericalFailure):
    pass


class IllConditionedFit(NumericalFailure):
    pass


class IoFailure(TempresError, OSError):
    pass

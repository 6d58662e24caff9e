"""Exception types shared across the workbench."""


class RilError(Exception):
    """Base class for all workbench errors."""


class ZeroPolynomial(RilError, ValueError):
    pass


class ZeroInput(RilError, ValueError):
    pass


class DimensionMismatch(RilError, ValueError):
    pass


class IndeterminatePoint(RilError):
    """Every coordinate polynomial vanished at the point.

    ``step`` is the (1-based) orbit step at which evaluation failed, when the
    error comes from an orbit engine; ``partial`` then holds the trace built so
    far.
    """

    def __init__(self, message, step=None, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial


class ExactCapExceeded(RilError):
    pass


class EngineUnsupported(RilError):
    pass


class ZeroVariance(RilError, ValueError):
    pass


class NTooSmall(RilError, ValueError):
    pass


class NotHeightControlled(RilError):
    pass


class MissingConstant(RilError):
    pass


class BudgetExceeded(RilError):
    pass


class TraceTooShort(RilError):
    pass


class SandwichInapplicable(RilError):
    pass


class InseparableTower(RilError):
    pass


class ConditionViolated(RilError):
    def __init__(self, level, which):
        super().__init__(f"condition {which!r} violated at level {level}")
        self.level = level
        self.which = which


class ConfigError(RilError, ValueError):
    """Invalid family/config input; message carries the field path."""

"""Exception hierarchy. The class name doubles as the CLI error category."""


class HypersyncError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def category(self) -> str:
        return type(self).__name__


class NonFiniteState(HypersyncError, ArithmeticError):
    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"non-finite state at t={self.time:.6g}")


class ConfigError(HypersyncError, ValueError):
    pass


class EmptyMessage(HypersyncError, ValueError):
    pass


class NonPositiveRange(HypersyncError, ValueError):
    pass


class NegativeSigma(HypersyncError, ValueError):
    pass


class PixelOutOfRange(HypersyncError, ValueError):
    pass


class DimensionMismatch(HypersyncError, ValueError):
    pass


class ScheduleTooShort(HypersyncError, ValueError):
    pass


class HeaderMismatch(HypersyncError, ValueError):
    pass


class SyncFailure(HypersyncError, RuntimeError):
    pass

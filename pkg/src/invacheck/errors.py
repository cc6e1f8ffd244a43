"""Exception hierarchy shared by every module of the toolkit."""


class InvacheckError(Exception):
    """Base class for all toolkit errors."""


class ExprSyntaxError(InvacheckError):
    """Malformed expression text.

    Attributes:
        position: zero-based character offset where parsing failed.
    """

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"at position {position}: {message}")


class DimensionError(InvacheckError, ValueError):
    pass


class NotPositiveDefinite(InvacheckError, ArithmeticError):
    pass


class NoConvergence(InvacheckError, ArithmeticError):
    pass


class EmptyRegion(InvacheckError):
    pass


class NoBoundaryFound(InvacheckError):
    pass


class DomainError(InvacheckError):
    """Every sampled point evaluated to not-a-number."""


class AllSamplesInvalid(DomainError):
    pass


class NegativeEntries(InvacheckError, ValueError):
    pass


class NegativeMultiplier(InvacheckError, ValueError):
    """A certificate scalar (beta or alpha) is negative."""


class OriginNotInterior(InvacheckError, ValueError):
    pass


class UsageError(InvacheckError, ValueError):
    pass


class SchemaError(InvacheckError):
    """Problem file failed validation.

    Attributes:
        path: JSON pointer to the offending field, e.g. ``/system/dynamics``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path or '/'}: {message}")

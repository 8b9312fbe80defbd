"""Exception hierarchy shared by every module."""


class DeixisError(Exception):
    """Base class for library errors."""


class ConfigInvalid(DeixisError, ValueError):
    pass


class PointBehindCamera(DeixisError, ValueError):
    pass


class NoValidViewpoint(DeixisError):
    pass


class NoEligibleTarget(DeixisError):
    pass


class UnreachableTarget(DeixisError):
    pass


class DegeneratePose(DeixisError, ValueError):
    pass


class CategoryInfeasible(DeixisError):
    pass


class InsufficientDistractors(DeixisError):
    pass


class RephraserUnavailable(DeixisError):
    pass


class ValidationFailed(DeixisError):
    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class ShapeMismatch(DeixisError, ValueError):
    pass


class GateClosed(DeixisError):
    pass


class LengthMismatch(DeixisError, ValueError):
    pass


class WidthMismatch(DeixisError, ValueError):
    pass


class UnknownQaId(DeixisError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class FlagViolation(DeixisError):
    pass


class IoFailure(DeixisError, OSError):
    pass


class SuiteFailure(DeixisError):
    def __init__(self, message, cases=()):
        super().__init__(message)
        self.cases = list(cases)


class ParseError(DeixisError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line

"""Exception hierarchy shared by every hect module."""


class HectError(Exception):
    """Base class for all errors raised by hect."""


class SchemaMismatch(HectError, ValueError):
    pass


class EmptyEnsemble(HectError, ValueError):
    pass


class DuplicateRunId(HectError, ValueError):
    pass


class NonFiniteValue(HectError, ValueError):
    pass


class ParseError(HectError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SingleClass(HectError, ValueError):
    pass


class LengthMismatch(HectError, ValueError):
    pass


class ShapeMismatch(HectError, ValueError):
    pass


class DegenerateEnsemble(HectError, ValueError):
    pass


class DegenerateVariance(HectError, ValueError):
    pass


class TooFewSamples(HectError, ValueError):
    pass


class InvalidConfig(HectError, ValueError):
    pass


class EmptyNull(HectError, ValueError):
    pass


class InsufficientTrusted(HectError, ValueError):
    pass


class NonFiniteLoss(HectError, ArithmeticError):
    """A classifier fit diverged."""


class InvalidConfigWarning(UserWarning):
    pass

class CurvecastError(ValueError):
    """Base class for every error raised by the curvecast library."""


class DomainError(CurvecastError):
    """Raised when an argument lies outside the model's domain (e.g. x <= 0)."""


class ContractError(CurvecastError):
    """Raised when inputs violate a call contract (lengths, signs, options)."""


class FlatCurveError(CurvecastError):
    """Raised when inverting a curve with b1 = 0, which never leaves 100%."""


class UnreachableTargetError(CurvecastError):
    """Raised when a target accuracy is at or above the 100% asymptote."""


class FlatDataError(CurvecastError):
    """Raised when every per-size mean accuracy equals 100%."""


class InsufficientDataError(CurvecastError):
    """Raised when fewer than two distinct training sizes are usable."""


class BootstrapFailureError(CurvecastError):
    """Raised when every bootstrap refit failed."""


class ObservationParseError(CurvecastError):
    """Raised when an observations CSV cannot be parsed.

    Attributes:
        line_number: 1-based line of the offending row (1 is the header).
    """

    def __init__(self, message, line_number):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")

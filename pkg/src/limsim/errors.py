"""Exception hierarchy for the simulator."""


class LimSimError(Exception):
    """Base class for every error raised by limsim."""


class IndexOutOfRange(LimSimError, IndexError):
    pass


class DuplicateIndex(LimSimError, ValueError):
    pass


class EnduranceExceeded(LimSimError):
    """A capacitor reached its program-cycle limit."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DisturbBudgetExhausted(LimSimError):
    """A capacitor needs a write-back before it may be sensed again."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class InvalidCellRead(LimSimError):
    pass


class WidthMismatch(LimSimError, ValueError):
    pass


class CommandSequenceError(LimSimError):
    """Commands issued in an order the array cannot honour (e.g. COPY with no open row)."""


class UnknownCommandKind(LimSimError, ValueError):
    pass


class ProgramError(LimSimError, ValueError):
    pass


class UndeclaredOperand(ProgramError):
    pass


class Reassignment(ProgramError):
    pass


class UnassignedOperand(ProgramError):
    pass


class CapacityExceeded(LimSimError):
    pass


class SizeNotAligned(LimSimError, ValueError):
    pass


class UnsupportedParams(LimSimError, ValueError):
    pass


class MissingPair(LimSimError):
    pass


class ConfigError(LimSimError, ValueError):
    pass

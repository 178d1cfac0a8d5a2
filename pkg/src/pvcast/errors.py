"""Exception hierarchy shared across the package."""


class PvcastError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(PvcastError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class DomainError(PvcastError, ValueError):
    """Input values are outside the mathematical domain of an operation."""


class ContractError(PvcastError, ValueError):
    """A documented precondition of an API was violated by the caller."""


class NumericsError(PvcastError, ArithmeticError):
    """A computation produced non-finite values."""


class ConfigError(PvcastError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class DataError(PvcastError, ValueError):
    """Input data violates a structural requirement (ordering, coverage, range)."""


class ParseError(DataError):
    """A data file could not be parsed; message carries the line number."""


class FormatError(PvcastError, ValueError):
    """A serialized artifact (checkpoint, manifest) is malformed or truncated."""


class TrainingError(PvcastError, RuntimeError):
    """Training diverged or could not proceed; message carries epoch/batch."""

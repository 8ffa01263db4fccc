"""Errors raised by the simulator, the encoders, the trainer and the file readers.

All of them derive from ValueError, so callers that only know about bad
values keep working.
"""


class OrganiqError(ValueError):
    """Base class for every error raised by this project."""


class ConfigurationError(OrganiqError):
    """Out-of-range sizes, indices or hyper-parameters."""


class EncodingError(OrganiqError):
    """Data that cannot be placed on a quantum register."""


class NumericError(OrganiqError):
    """A numerical routine failed (non-convergence, NaN loss, bad probabilities)."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotPSDError(NumericError):
    """Matrix expected to be positive semi-definite has a significantly negative eigenvalue."""


class InsufficientDataError(OrganiqError):
    """Too few samples for the requested statistic or fit."""


class InversionError(OrganiqError):
    """Circuit segment cannot be inverted (it prepares a state)."""


class UnsupportedCircuitError(OrganiqError):
    """Circuit shape the gradient rule does not support."""


class FormatError(OrganiqError):
    """Malformed IDX or PGM file."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ModelFileError(OrganiqError):
    """Model file is unreadable, of another version, or inconsistent."""

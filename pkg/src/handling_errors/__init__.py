"""Exception hierarchy shared by every organiq package."""
from .errors import (
    OrganiqError,
    ConfigurationError,
    EncodingError,
    NumericError,
    NotPSDError,
    InsufficientDataError,
    InversionError,
    UnsupportedCircuitError,
    FormatError,
    ModelFileError,
)

__all__ = [
    'OrganiqError',
    'ConfigurationError',
    'EncodingError',
    'NumericError',
    'NotPSDError',
    'InsufficientDataError',
    'InversionError',
    'UnsupportedCircuitError',
    'FormatError',
    'ModelFileError',
]

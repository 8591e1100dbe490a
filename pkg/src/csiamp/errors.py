"""Exception hierarchy shared across the package.

The CLI maps each family onto an exit code (config 2, data 3, numeric 4).
"""


class CsiAmpError(Exception):
    """Base class for all package errors."""


class ConfigError(CsiAmpError, ValueError):
    """Invalid experiment configuration."""


class DataError(CsiAmpError):
    """Malformed, corrupted or mismatched data/model files."""


class ChecksumError(DataError):
    pass


class FormatVersionError(DataError):
    pass


class FingerprintError(DataError):
    """Datasets or models that were produced by incompatible experiments."""


class NumericError(CsiAmpError, FloatingPointError):
    """Non-finite values surfaced during training or optimisation."""

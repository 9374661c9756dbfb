"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class InterconvError(Exception):
    """Base class for all package errors."""


class ConfigError(InterconvError):
    """Invalid configuration value, flag, or parameter combination."""


class GeometryError(ConfigError):
    """Window/stride/start placement that does not fit the input grid."""


class DataError(InterconvError):
    """Malformed or inconsistent input data."""


class UndefinedMetricError(DataError):
    """A metric whose denominator is empty (e.g. sensitivity with no positives)."""


class BundleFormatError(DataError):
    """Model bundle that cannot be parsed at all."""


class BundleVersionError(BundleFormatError):
    """Model bundle written by a newer format version."""


class BundleIntegrityError(BundleFormatError):
    """Model bundle section whose checksum does not match its payload."""


class NumericError(InterconvError):
    """Numeric failure during training or evaluation (NaN/overflow)."""

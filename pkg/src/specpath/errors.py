"""Exception hierarchy.

Every error raised on purpose by the package derives from ``SpecPathError``.
The CLI maps the three families onto its exit codes: configuration (1),
data (2) and numerical (3).
"""


class SpecPathError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ConfigurationError(SpecPathError, ValueError):
    """Bad arguments, shapes or settings supplied by the caller."""

    exit_code = 1


class DataError(SpecPathError, ValueError):
    """Input data is malformed: non-finite values, missing columns, bad files."""

    exit_code = 2


class SchemaError(DataError):
    """A model file does not follow the expected JSON layout."""


class VersionError(SchemaError):
    """A model file carries an unsupported ``format_version``."""


class InvalidPathError(ConfigurationError):
    """A frequency vector is unusable as a spectral path (e.g. empty support)."""


class InvalidCandidateError(ConfigurationError):
    """A candidate block overlaps the existing dictionary."""


class StateError(SpecPathError, RuntimeError):
    """Operation requires a fitted model."""

    exit_code = 2


class UndefinedMetricError(DataError):
    """Metric is undefined, typically because the reference target is constant."""


class NumericalError(SpecPathError, ArithmeticError):
    """Factorisation failed even after diagonal jitter."""

    exit_code = 3

    def __init__(self, message, *, condition=None, jitter=None):
        super().__init__(message)
        self.condition = condition
        self.jitter = jitter

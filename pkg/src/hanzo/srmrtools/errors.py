"""Exceptions raised by srmrtools.

Every error carries the process exit code the command line tools use
for it: 1 for bad or unreadable input, 2 for degenerate data and
numeric failures.
"""

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


class SrmrError(Exception):
    """Baseclass for all srmrtools errors"""

    exit_code = EXIT_NUMERIC


class InputError(SrmrError):
    """Input could not be read, or is invalid for the requested operation"""

    exit_code = EXIT_INPUT


class NumericError(SrmrError):
    """Input was readable but the data is degenerate for the computation"""

    exit_code = EXIT_NUMERIC


class UnsupportedFormatError(InputError):
    pass


class TruncatedFileError(InputError):
    pass


class EmptyAudioError(InputError):
    pass


class SilentInputError(InputError):
    """All-zero audio where a signal is required."""

    pass


class GeometryError(InputError):
    pass


class ConfigError(InputError):
    pass


class ManifestError(InputError):
    pass


class ModelFormatError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class HeterogeneousFeaturesError(InputError):
    pass


class InvalidTargetError(InputError):
    pass


class NoActivityError(NumericError):
    pass


class InsufficientDurationError(NumericError):
    pass


class UtteranceTooShortError(NumericError):
    pass


class DegenerateTensorError(NumericError):
    pass


class InsufficientDecayError(NumericError):
    pass


class DegenerateDecayError(NumericError):
    pass


class DegenerateRirError(NumericError):
    pass


class SingularDesignError(NumericError):
    pass


class NoConvergenceError(NumericError):
    pass


class UndefinedCorrelationError(NumericError):
    pass

"""Exception hierarchy shared across the package.

Every error raised by library code derives from :class:`SpreadscopeError` so
callers (and the CLI) can distinguish domain failures from programming bugs.
"""


class SpreadscopeError(Exception):
    """Base class for all library errors."""


class ParseError(SpreadscopeError):
    """Malformed input CSV (bad date, bad number, duplicate or disordered rows)."""


class AlignmentError(SpreadscopeError):
    """Recession series does not align with the feature dates or has bad values."""


class SplitError(SpreadscopeError):
    """Invalid temporal split request (overlapping, reversed, or empty ranges)."""


class StatsError(SpreadscopeError):
    """Descriptive statistics requested on degenerate input."""


class CorrelationError(SpreadscopeError):
    """Correlation matrix requested on degenerate input (zero-variance column)."""


class FetchError(SpreadscopeError):
    """Remote series fetch failed with no usable cache."""


class LiftError(SpreadscopeError):
    """Lift is undefined for the given mask or target."""


class FitError(SpreadscopeError):
    """Model training rejected its input."""


class PredictError(SpreadscopeError):
    """Prediction rejected its input."""


class ExplainError(SpreadscopeError):
    """Attribution computation rejected the model or its configuration."""


class RuleError(SpreadscopeError):
    """Rule scoring or labeling rejected its input."""


class ConfigError(SpreadscopeError):
    """Invalid run configuration (CLI or config file)."""


class MetricsError(SpreadscopeError):
    """Confusion-matrix evaluation rejected its input."""


class ModelIOError(SpreadscopeError):
    """Model file cannot be written, read, or validated."""

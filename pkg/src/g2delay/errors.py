"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad parameter values or incompatible settings (ranges, windows, spans)."""


class AnalysisError(ValueError):
    """Extraction cannot proceed: unusable peak, empty denominator, dip below
    the mixing floor, or a result that was already corrected."""


class ConstraintViolation(RuntimeError):
    """A strict run refused to proceed because the optical-delay design
    checks failed (delay inside the dead zone or too close to the period)."""


class StreamFormatError(ValueError):
    """Base class for timestamp-file format violations."""


class BadMagicError(StreamFormatError):
    """File does not start with the expected magic bytes."""


class NonMonotonicError(StreamFormatError):
    """Payload timestamps decrease somewhere; ``index`` is the offending
    position (the first record that is earlier than its predecessor)."""

    def __init__(self, index: int, message: str | None = None):
        self.index = int(index)
        super().__init__(message or f"timestamps decrease at record {index}")


class TruncatedFileError(StreamFormatError):
    """File ends before the number of records promised by the header."""

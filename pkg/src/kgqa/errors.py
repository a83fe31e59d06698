"""Shared exception types."""


class KgqaError(Exception):
    """Base class for all errors raised by this package."""


class TripleFileError(KgqaError):
    """Malformed triple source (bad arity, empty field, empty stream)."""

    def __init__(self, message: str, line_number: int | None = None, line: str | None = None):
        self.line_number = line_number
        self.line = line
        if line_number is not None:
            message = f"line {line_number}: {message}"
        if line is not None:
            message = f"{message} (content: {line!r})"
        super().__init__(message)


class UnbalancedBracketError(KgqaError):
    """A question's [entity] markup is unbalanced or nested."""

    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class ConfigurationError(KgqaError):
    """Invalid or mismatched component configuration."""


class DimensionMismatchError(KgqaError):
    """Token matrices of different dimensionality were scored together."""

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        super().__init__(f"dimension mismatch: {left} vs {right}")


class IndexFormatError(KgqaError):
    """A serialized index file is corrupt or from an incompatible version."""


class QAFileError(KgqaError):
    """Malformed QA dataset line."""

    def __init__(self, message: str, line_number: int):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class CorpusError(KgqaError):
    """Infusion-corpus construction cannot proceed."""


class TemplateError(KgqaError):
    """A QA generation template is malformed."""

"""Exception hierarchy.

The CLI maps exception families onto exit codes: ``DataError`` -> 2,
``ServiceError`` -> 3, ``ConfigError`` -> 1.
"""


class ChunkorderError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ChunkorderError):
    """Bad or missing configuration (treated as a usage error)."""


class DataError(ChunkorderError):
    """Input data violates a contract."""


class ParseError(DataError):
    kind = "ParseError"

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class UnclosedTag(ParseError):
    kind = "UnclosedTag"


class UnknownLabel(ParseError):
    kind = "UnknownLabel"


class NestedTag(ParseError):
    kind = "NestedTag"


class StrayClosingTag(ParseError):
    kind = "StrayClosingTag"


class EmptyChunk(ParseError):
    kind = "EmptyChunk"


class EncodingError(DataError):
    kind = "EncodingError"


class IoFailure(DataError):
    kind = "IoFailure"


class CorpusLoadError(DataError):
    """Strict load rejected at least one line; ``diagnostics`` lists them."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DuplicateId(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class EmptySamples(DataError):
    pass


class NoEligibleSentences(DataError):
    pass


class DomainError(DataError, ValueError):
    pass


class IdMismatch(DataError):
    pass


class SchemaError(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NonFiniteComponent(DataError):
    pass


class EmptySelection(DataError):
    pass


class ZeroNorm(DataError, ZeroDivisionError):
    pass


class FewShotError(DataError):
    pass


class EmptyFewShot(FewShotError):
    pass


class ServiceError(ChunkorderError):
    """Transport or HTTP failure talking to the annotation endpoint."""


class AuthMissing(ServiceError):
    pass


class MalformedAnnotation(ServiceError):
    """Every attempt returned output that does not parse in strict mode."""

    def __init__(self, message, attempts, last_reply=None):
        super().__init__(message)
        self.attempts = attempts
        self.last_reply = last_reply

"""Exception hierarchy shared across the library, API, and CLI.

Every error carries a stable ``code`` drawn from the closed set used by the
HTTP layer and the CLI exit-code table, plus a ``retryable`` hint.
"""

from __future__ import annotations


class ExpandocError(Exception):
    """Base class; subclasses pin a wire code and retryability."""

    code = "validation_failed"
    retryable = False

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_payload(self) -> dict:
        return {"code": self.code, "message": self.message, "retryable": self.retryable}


class NotFoundError(ExpandocError):
    code = "not_found"


class ValidationFailedError(ExpandocError):
    code = "validation_failed"


class InvalidAnchorError(ExpandocError):
    code = "invalid_anchor"


class DepthExceededError(ExpandocError):
    code = "depth_exceeded"


class ProviderError(ExpandocError):
    """Base for chat/embedding provider failures."""

    code = "provider_unavailable"
    retryable = True


class ProviderUnreachableError(ProviderError):
    """Transport failure or retries exhausted."""


class ProviderTimeoutError(ProviderError):
    """Request exceeded the configured timeout."""


class ProviderRefusalError(ProviderError):
    """Provider answered but declined the request; not retryable."""

    retryable = False


class DimensionMismatchError(ValidationFailedError):
    """Vector dimensionality differs from what the index expects."""


class ZeroVectorError(ValidationFailedError):
    """Cosine similarity is undefined for all-zero vectors."""


class UnboundPlaceholderError(ValidationFailedError):
    """A prompt template placeholder was left without a binding."""

    def __init__(self, placeholder: str):
        super().__init__(f"unbound placeholder: {placeholder}")
        self.placeholder = placeholder


class EmptyInputError(ValidationFailedError):
    """Input text was empty or whitespace-only."""


class ParserOutputInvalidError(ValidationFailedError):
    """Parser-service output failed structural validation."""


# CLI exit codes, one per wire code (0 = success, 1 = unexpected failure).
EXIT_CODES = {
    "validation_failed": 2,
    "not_found": 3,
    "invalid_anchor": 4,
    "no_answer": 5,
    "provider_unavailable": 6,
    "depth_exceeded": 7,
}

"""Exception types shared across the engine."""

from __future__ import annotations


class ReadalongError(Exception):
    """Base class for all engine errors."""


class ContractError(ReadalongError):
    """A documented precondition was violated by the caller."""


class IllegalInputError(ContractError):
    """An input arrived in a session phase that does not accept it."""


class KnowledgeBaseError(ReadalongError):
    pass


class KnowledgeParseError(KnowledgeBaseError):
    """Malformed knowledge-base document; names the offending record."""

    def __init__(self, message: str, record_index: int | None = None):
        super().__init__(message)
        self.record_index = record_index


class KnowledgeValidationError(KnowledgeBaseError):
    """Well-formed document with invalid content (bad grade, duplicate id)."""


class NotFoundError(ReadalongError):
    pass


class ConflictError(ReadalongError):
    pass


class ProviderError(ReadalongError):
    """A provider call failed.

    retryable distinguishes transient transport faults from permanent
    rejections; the retry wrapper only re-attempts the former.
    """

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ScriptMismatchError(ProviderError):
    """Scripted mock received a call its fixture did not expect."""

    def __init__(self, message: str):
        super().__init__(message, retryable=False)


class OcrError(ProviderError):
    pass

"""
Custom exception classes and handlers
"""

import logging
from typing import Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2


class OntoNormException(Exception):
    """Base exception carrying a message and structured details"""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


# Ontology

class OntologyParseException(OntoNormException):
    """Raised when the ontology CSV cannot be parsed"""
    pass


class InvalidIdException(OntoNormException):
    """Raised when a string is not a valid HP identifier"""

    def __init__(self, raw: str, reason: str = "not of the form HP:nnnnnnn"):
        super().__init__(f"Invalid ontology ID {raw!r}: {reason}", {"raw": raw})
        self.raw = raw


class DuplicateConceptException(OntoNormException):
    """Raised when two rows carry the same ontology ID"""
    pass


# Embeddings and retrieval

class EmbeddingLoadException(OntoNormException):
    """Raised when an embedding file is malformed"""
    pass


class EmbeddingAlignmentException(EmbeddingLoadException):
    """Raised when embedding rows do not line up with the entry table"""
    pass


class EmbeddingProviderException(OntoNormException):
    """Raised when an embedding provider fails"""

    def __init__(
        self,
        message: str,
        details: Optional[dict] = None,
        retryable: bool = False,
        retry_after: Optional[float] = None,
    ):
        super().__init__(message, details)
        self.retryable = retryable
        self.retry_after = retry_after


class EmbeddingDimensionException(OntoNormException):
    """Raised when vector dimensions drift within a batch"""
    pass


class IndexBuildException(OntoNormException):
    """Raised when a term index cannot be built"""
    pass


class DimensionMismatchException(OntoNormException):
    """Raised when two vectors (or a query and an index) disagree on dimension"""
    pass


class ZeroVectorException(OntoNormException):
    """Raised when a similarity is asked of the zero vector"""
    pass


# Normalization

class ResultsFileException(OntoNormException):
    """Raised when a results or partial results file is corrupt"""
    pass


# LLM

class PromptException(OntoNormException):
    """Raised when a prompt precondition is violated"""
    pass


class LLMTransportException(OntoNormException):
    """Raised on transient chat-completions failures (timeouts, 429, 5xx)"""

    def __init__(self, message: str, details: Optional[dict] = None, retry_after: Optional[float] = None):
        super().__init__(message, details)
        self.retry_after = retry_after


class LLMAuthException(OntoNormException):
    """Raised when the endpoint rejects the credentials"""
    pass


class LLMRetriesExhaustedException(OntoNormException):
    """Raised when a request keeps failing after all retries"""
    pass


class LLMReplyException(OntoNormException):
    """Raised when the endpoint answers with a body that is not a chat completion"""
    pass


class JudgeVerdictException(OntoNormException):
    """Raised when a judge reply is not a yes/no verdict"""
    pass


# Evaluation

class EvaluationException(OntoNormException):
    """Raised on inconsistent results/gold inputs"""
    pass


class ReviewSheetException(OntoNormException):
    """Raised when a review sheet cannot be imported"""
    pass


# Ingest

class OmimAuthException(OntoNormException):
    """Raised when OMIM rejects the API key"""
    pass


class OmimQuotaException(OntoNormException):
    """Raised when the OMIM quota is exhausted"""
    pass


class OmimTransportException(OntoNormException):
    """Raised on retryable OMIM transport failures"""
    pass


class ExtractionException(OntoNormException):
    """Raised when sign extraction fails for a document"""
    pass


# Configuration and usage

class ConfigurationException(OntoNormException):
    """Raised when settings are inconsistent"""
    pass


class UsageException(OntoNormException):
    """Raised on invalid command-line usage"""
    pass


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to a CLI exit status"""
    if isinstance(exc, (UsageException, ConfigurationException)):
        return EXIT_USAGE_ERROR
    return EXIT_DATA_ERROR


def handle_exception(exc: BaseException) -> int:
    """Log an exception and return the exit status for it"""
    if isinstance(exc, OntoNormException):
        logger.error(f"{type(exc).__name__}: {exc.message}", extra={"details": exc.details})
    elif isinstance(exc, OSError):
        logger.error(f"File error: {str(exc)}")
    else:
        logger.error(f"Unexpected error: {str(exc)}", exc_info=True)
    return exit_code_for(exc)

from .client import (
    CONTEXT_LIMIT,
    EMBED_DIM,
    INFERENCE_TEMPERATURE,
    SUMMARY_TEMPERATURE,
    Completion,
    LLMClient,
    ResponseCache,
    TransientProviderError,
    count_tokens,
)
from .http import HttpProvider
from .mock import MockProvider, OracleSpec, hash_embedding

__all__ = [
    "CONTEXT_LIMIT",
    "EMBED_DIM",
    "INFERENCE_TEMPERATURE",
    "SUMMARY_TEMPERATURE",
    "Completion",
    "HttpProvider",
    "LLMClient",
    "MockProvider",
    "OracleSpec",
    "ResponseCache",
    "TransientProviderError",
    "count_tokens",
    "hash_embedding",
]

"""Semantic initialization of sentinel embeddings from their natural-language descriptions."""

import re
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field

from revstream_core.episode import SENTINEL_DESCRIPTIONS
from revstream_core.errors import DimensionMismatch, EmptyDescription
from revstream_core.models import DEFAULT_SENTINELS, SentinelRole, SentinelSet, Token

_WORD = re.compile(r"[A-Za-z0-9_-]+")


class EmbeddingInitSpec(BaseModel):
    description_vectors: list[list[float]] = Field(..., description="E(w) for every word of the description")
    weights: list[float] | None = Field(None, description="alpha_w per vector, uniform when omitted")


def semantic_init(spec: EmbeddingInitSpec) -> np.ndarray:
    """Weighted average (1/Z) * sum(alpha_w * E(w)), accumulated in input order."""
    vectors = spec.description_vectors
    if not vectors:
        raise EmptyDescription("Semantic initialization needs at least one description vector")

    dim = len(vectors[0])
    if any(len(v) != dim for v in vectors):
        raise DimensionMismatch("All description vectors must share one dimension")

    weights = spec.weights if spec.weights is not None else [1.0] * len(vectors)
    if len(weights) != len(vectors):
        raise DimensionMismatch(f"Got {len(weights)} weights for {len(vectors)} vectors")
    if any(w < 0 for w in weights):
        raise ValueError("Weights cannot be negative")

    z = float(sum(weights))
    if z <= 0:
        raise ValueError("Weight normalizer must be positive")

    acc = np.zeros(dim, dtype=np.float64)
    for weight, vector in zip(weights, vectors, strict=True):
        acc += weight * np.asarray(vector, dtype=np.float64)
    return acc / z


def description_words(description: str) -> list[str]:
    return _WORD.findall(description.lower())


def init_sentinel_embeddings(
    embed: Callable[[str], Sequence[float]],
    sentinels: SentinelSet = DEFAULT_SENTINELS,
    descriptions: dict[SentinelRole, str] = SENTINEL_DESCRIPTIONS,
) -> dict[Token, np.ndarray]:
    """Initialize every sentinel as the uniform average of its description's word embeddings."""
    vectors: dict[Token, np.ndarray] = {}
    for role, token in sentinels.canonical().items():
        words = description_words(descriptions.get(role, ""))
        if not words:
            raise EmptyDescription(f"No description words for sentinel {token!r}")
        spec = EmbeddingInitSpec(description_vectors=[list(embed(w)) for w in words])
        vectors[token] = semantic_init(spec)
    return vectors

"""Fixed-size SRS chunking, top-k context retrieval, and per-type dynamic
example retrieval.

Pair-to-pair similarity supports two aggregations: ``max_avg`` (mean of each
target requirement's best match in the candidate pair) and ``avg`` (mean over
all four combinations).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    GROUND_TRUTH_LABELS,
    AnnotatedPair,
    DependencyLabel,
    RequirementPair,
)
from .embedding import SIMILARITY_METRICS, EmbeddingVector
from .errors import InvalidConfig, ModelMismatch


@dataclass(frozen=True)
class Chunk:
    """A character-addressed fragment of the SRS text."""

    chunk_id: int
    text: str
    char_start: int
    char_end: int
    embedding: Optional[EmbeddingVector] = None

    def with_embedding(self, embedding: EmbeddingVector) -> "Chunk":
        return Chunk(self.chunk_id, self.text, self.char_start, self.char_end, embedding)


@dataclass(frozen=True)
class RetrievalConfig:
    chunk_size: int = 500
    chunk_overlap: int = 200
    context_k: int = 10
    example_k: int = 4
    metric: str = "euclidean"  # or "cosine"
    aggregation: str = "max_avg"  # or "avg"
    embed_model: str = "stub-16"

    def __post_init__(self) -> None:
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise InvalidConfig("need 0 <= overlap < chunk_size")
        if self.context_k < 0:
            raise InvalidConfig("context_k must be >= 0")
        if self.example_k < 1:
            raise InvalidConfig("example_k must be >= 1")
        if self.metric not in SIMILARITY_METRICS:
            raise InvalidConfig(f"unknown metric {self.metric!r}")
        if self.aggregation not in ("max_avg", "avg"):
            raise InvalidConfig(f"unknown aggregation {self.aggregation!r}")


# Ordered map from label to scored examples, best first.
ExampleSet = dict[DependencyLabel, list[tuple[AnnotatedPair, float]]]


def chunk_text(text: str, chunk_size: int, overlap: int) -> list[Chunk]:
    """Fixed-size chunks with the given overlap.

    Chunk i covers [i*stride, i*stride + chunk_size) clipped to the text;
    generation stops once a chunk's end reaches the end of the text, so there
    is never a fully redundant tail chunk.  Empty text yields no chunks.
    """
    if not 0 <= overlap < chunk_size:
        raise InvalidConfig("need 0 <= overlap < chunk_size")
    stride = chunk_size - overlap
    chunks: list[Chunk] = []
    start = 0
    while start < len(text):
        end = min(start + chunk_size, len(text))
        chunks.append(Chunk(len(chunks), text[start:end], start, end))
        if end >= len(text):
            break
        start += stride
    return chunks


class _EmbeddingIndex:
    """Resolves texts to their precomputed vectors and checks model ids."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self._vectors: dict[str, EmbeddingVector] = {}

    def add(self, text: str, vector: EmbeddingVector) -> None:
        if vector.model_id != self.model_id:
            raise ModelMismatch(
                f"expected model {self.model_id!r}, got {vector.model_id!r}"
            )
        self._vectors[text] = vector

    def get(self, text: str) -> EmbeddingVector:
        try:
            return self._vectors[text]
        except KeyError:
            raise ModelMismatch(f"no embedding for text {text[:40]!r}...") from None


@dataclass
class EmbeddedStore:
    """Embeddings for requirements and chunks, shared read-only by workers."""

    model_id: str
    _index: _EmbeddingIndex = field(init=False)

    def __post_init__(self) -> None:
        self._index = _EmbeddingIndex(self.model_id)

    def add(self, text: str, vector: EmbeddingVector) -> None:
        self._index.add(text, vector)

    def vector(self, text: str) -> EmbeddingVector:
        return self._index.get(text)


def retrieve_context(
    pair: RequirementPair,
    chunks: Sequence[Chunk],
    config: RetrievalConfig,
    store: EmbeddedStore,
) -> list[Chunk]:
    """Top ``context_k`` chunks by max similarity to either requirement.

    Ties break by ascending chunk_id; fewer chunks are returned if fewer
    exist.
    """
    sim = SIMILARITY_METRICS[config.metric]
    vec_a = store.vector(pair.a.text)
    vec_b = store.vector(pair.b.text)
    scored = []
    for chunk in chunks:
        embedding = chunk.embedding or store.vector(chunk.text)
        if embedding.model_id != config.embed_model:
            raise ModelMismatch(
                f"chunk embedded with {embedding.model_id!r}, "
                f"config wants {config.embed_model!r}"
            )
        score = max(sim(embedding, vec_a), sim(embedding, vec_b))
        scored.append((score, chunk))
    scored.sort(key=lambda item: (-item[0], item[1].chunk_id))
    return [chunk for _, chunk in scored[: config.context_k]]


def pair_similarity(
    target: RequirementPair,
    candidate: RequirementPair,
    metric: str,
    aggregation: str,
    store: EmbeddedStore,
) -> float:
    """Similarity between two requirement pairs under the chosen aggregation."""
    sim = SIMILARITY_METRICS[metric]
    t1, t2 = store.vector(target.a.text), store.vector(target.b.text)
    c1, c2 = store.vector(candidate.a.text), store.vector(candidate.b.text)
    s_1a, s_1b = sim(t1, c1), sim(t1, c2)
    s_2a, s_2b = sim(t2, c1), sim(t2, c2)
    if aggregation == "max_avg":
        return (max(s_1a, s_1b) + max(s_2a, s_2b)) / 2.0
    if aggregation == "avg":
        return (s_1a + s_1b + s_2a + s_2b) / 4.0
    raise InvalidConfig(f"unknown aggregation {aggregation!r}")


def retrieve_examples(
    target: RequirementPair,
    pool: Sequence[AnnotatedPair],
    config: RetrievalConfig,
    store: EmbeddedStore,
) -> ExampleSet:
    """Top ``example_k`` pool examples per label, most similar first.

    Candidates sharing a requirement id with the target are excluded to keep
    the answer from leaking into the prompt.  Ties break by pool order.
    Labels with no surviving candidates map to empty lists.
    """
    examples: ExampleSet = {label: [] for label in GROUND_TRUTH_LABELS}
    scored: dict[DependencyLabel, list[tuple[float, int, AnnotatedPair]]] = {
        label: [] for label in GROUND_TRUTH_LABELS
    }
    for position, annotated in enumerate(pool):
        if annotated.pair.shares_requirement(target):
            continue
        score = pair_similarity(
            target, annotated.pair, config.metric, config.aggregation, store
        )
        scored[annotated.label].append((score, position, annotated))
    for label, candidates in scored.items():
        candidates.sort(key=lambda item: (-item[0], item[1]))
        examples[label] = [
            (annotated, score)
            for score, _, annotated in candidates[: config.example_k]
        ]
    return examples

"""Embedding providers (remote service, deterministic stub), cache, and
similarity metrics.

The stub provider maps (model_id, text) to a fixed 16-dimensional unit vector
via SHA-256, so the whole pipeline runs deterministically without a network.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .errors import DimensionMismatch, InvalidConfig, ProviderUnavailable, ZeroVector

STUB_DIMENSION = 16

API_KEY_ENV = "REQDEP_EMBED_API_KEY"


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    provider_kind: str = "stub"  # "remote" or "stub"
    endpoint: Optional[str] = None
    model_id: str = "stub-16"
    batch_size: int = 64
    cache_path: Optional[Path] = None
    max_retries: int = 3
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.provider_kind not in ("remote", "stub"):
            raise InvalidConfig(f"unknown provider kind {self.provider_kind!r}")
        if self.provider_kind == "remote" and not self.endpoint:
            raise InvalidConfig("remote embedding provider requires an endpoint")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")


def _content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def stub_vector(model_id: str, text: str) -> EmbeddingVector:
    """Deterministic hash-to-unit-vector construction, dimension 16.

    Each component comes from 4 bytes of SHA-256(model_id NUL text NUL i),
    mapped into [-1, 1]; the result is L2-normalized.
    """
    raw: list[float] = []
    for i in range(STUB_DIMENSION // 8):
        digest = hashlib.sha256(
            f"{model_id}\x00{text}\x00{i}".encode("utf-8")
        ).digest()
        for j in range(8):
            word = int.from_bytes(digest[4 * j : 4 * j + 4], "big")
            raw.append(word / 2**31 - 1.0)
    norm = math.sqrt(sum(v * v for v in raw))
    if norm == 0.0:  # astronomically unlikely, but keep the invariant
        raw[0], norm = 1.0, 1.0
    return EmbeddingVector(tuple(v / norm for v in raw), model_id)


class EmbeddingCache:
    """Append-only JSONL cache keyed by (model_id, content hash).

    Concurrent readers are safe; writes are serialized with a lock.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str], tuple[float, ...]] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    key = (record["model_id"], record["hash"])
                    self._entries[key] = tuple(record["values"])

    def get(self, model_id: str, text: str) -> Optional[tuple[float, ...]]:
        return self._entries.get((model_id, _content_hash(text)))

    def put(self, model_id: str, text: str, values: Sequence[float]) -> None:
        key = (model_id, _content_hash(text))
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = tuple(values)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"model_id": key[0], "hash": key[1], "values": list(values)}
                    )
                    + "\n"
                )


def _remote_embed(
    texts: list[str], config: EmbeddingProviderConfig
) -> list[list[float]]:
    headers = {}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {"model": config.model_id, "input": texts}
    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        try:
            response = httpx.post(
                config.endpoint,
                json=payload,
                headers=headers,
                timeout=config.timeout,
            )
            response.raise_for_status()
            data = response.json()["data"]
            return [entry["embedding"] for entry in data]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            last_error = exc
            if attempt < config.max_retries:
                time.sleep(min(2.0**attempt, 10.0))
    raise ProviderUnavailable(
        f"embedding endpoint failed after {config.max_retries + 1} attempts: {last_error}"
    )


def embed_batch(
    texts: Sequence[str],
    config: EmbeddingProviderConfig,
    cache: Optional[EmbeddingCache] = None,
) -> list[EmbeddingVector]:
    """Embed texts, order-preserving, consulting the cache when given.

    Remote requests are batched at ``config.batch_size``; the stub provider is
    a pure function of (model_id, text).
    """
    if any(not text for text in texts):
        raise InvalidConfig("cannot embed empty texts")
    if cache is None and config.cache_path is not None:
        cache = EmbeddingCache(config.cache_path)

    results: list[Optional[EmbeddingVector]] = [None] * len(texts)
    missing: list[int] = []
    for i, text in enumerate(texts):
        if cache is not None:
            hit = cache.get(config.model_id, text)
            if hit is not None:
                results[i] = EmbeddingVector(hit, config.model_id)
                continue
        missing.append(i)

    if missing:
        if config.provider_kind == "stub":
            fresh = [stub_vector(config.model_id, texts[i]).values for i in missing]
        else:
            fresh = []
            for start in range(0, len(missing), config.batch_size):
                batch = [texts[i] for i in missing[start : start + config.batch_size]]
                fresh.extend(tuple(v) for v in _remote_embed(batch, config))
        for i, values in zip(missing, fresh):
            results[i] = EmbeddingVector(tuple(values), config.model_id)
            if cache is not None:
                cache.put(config.model_id, texts[i], values)

    dimensions = {len(v) for v in results if v is not None}
    if len(dimensions) > 1:
        raise DimensionMismatch(
            f"mixed embedding dimensions {sorted(dimensions)} for {config.model_id}"
        )
    return results  # type: ignore[return-value]


def _check_dims(u: EmbeddingVector, v: EmbeddingVector) -> None:
    if len(u) != len(v):
        raise DimensionMismatch(f"dimension {len(u)} vs {len(v)}")


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """dot(u, v) / (|u| * |v|), in [-1, 1]."""
    _check_dims(u, v)
    dot = sum(a * b for a, b in zip(u.values, v.values))
    norm_u = math.sqrt(sum(a * a for a in u.values))
    norm_v = math.sqrt(sum(b * b for b in v.values))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    return dot / (norm_u * norm_v)


def euclidean_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """1 / (1 + euclidean distance), in (0, 1].

    Any strictly decreasing transform of the distance yields the same top-k
    ranking; this one is bounded, which keeps scores comparable across runs.
    """
    _check_dims(u, v)
    distance = math.sqrt(sum((a - b) ** 2 for a, b in zip(u.values, v.values)))
    return 1.0 / (1.0 + distance)


SIMILARITY_METRICS = {
    "cosine": cosine_similarity,
    "euclidean": euclidean_similarity,
}

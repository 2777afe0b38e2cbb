"""Embedding acquisition with a persistent content-addressed JSONL cache and
a deterministic mock embedder, so the whole pipeline can run offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import requests

from .core import EmbeddingVector, content_hash

log = logging.getLogger(__name__)

_KEY_SEPARATOR = "\x1f"  # unit separator between model_id and text


class EmbedFailed(RuntimeError):
    def __init__(self, key: str, cause: Exception | None = None, index: int | None = None):
        at = f" (batch index {index})" if index is not None else ""
        super().__init__(f"embedding failed for key {key}{at}: {cause}")
        self.key = key
        self.index = index


def cache_key(model_id: str, text: str) -> str:
    return content_hash(model_id + _KEY_SEPARATOR + text)


@dataclass(frozen=True)
class EmbeddingCacheEntry:
    key: str
    model_id: str
    vector: EmbeddingVector


class EmbeddingCache:
    """Append-only JSONL cache keyed by content hash of (model_id, text).

    Re-embedding a cached text never changes the stored vector; concurrent
    reads are free, writes are serialized through one lock.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = os.fspath(path) if path is not None else None
        self._entries: dict[str, EmbeddingCacheEntry] = {}
        self._lock = threading.Lock()
        if self.path and os.path.exists(self.path):
            self._load()

    def _load(self) -> None:
        assert self.path is not None
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                entry = EmbeddingCacheEntry(
                    key=rec["key"],
                    model_id=rec["model_id"],
                    vector=EmbeddingVector(tuple(rec["vector"]), model_id=rec["model_id"]),
                )
                self._entries.setdefault(entry.key, entry)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, model_id: str, text: str) -> EmbeddingVector | None:
        entry = self._entries.get(cache_key(model_id, text))
        return entry.vector if entry else None

    def vector_for(self, model_id: str, text: str) -> EmbeddingVector:
        vec = self.get(model_id, text)
        if vec is None:
            raise KeyError(f"no cached embedding for model {model_id!r}, key {cache_key(model_id, text)}")
        return vec

    def reader(self, model_id: str) -> Callable[[str], EmbeddingVector]:
        """A text -> vector lookup bound to one model; raises KeyError on miss."""
        return lambda text: self.vector_for(model_id, text)

    def put(self, model_id: str, text: str, vector: EmbeddingVector) -> None:
        key = cache_key(model_id, text)
        with self._lock:
            if key in self._entries:
                return  # append-only: first write wins
            entry = EmbeddingCacheEntry(key, model_id, vector)
            self._entries[key] = entry
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(
                        {"key": key, "model_id": model_id, "vector": list(vector.values)}
                    ))
                    fh.write("\n")


# ---------------------------------------------------------------------------
# Deterministic mock embedder

_TWO_53 = float(1 << 53)


def _hash_uniforms(text: str, needed: int) -> list[float]:
    """Uniform doubles in (0, 1] derived from SHA-256 in counter mode; the
    same text yields the same stream on every platform and run."""
    out: list[float] = []
    seed = text.encode("utf-8")
    counter = 0
    while len(out) < needed:
        block = hashlib.sha256(seed + b"\x00" + counter.to_bytes(8, "big")).digest()
        for (word,) in struct.iter_unpack(">Q", block):
            out.append(((word >> 11) + 1) / _TWO_53)
        counter += 1
    return out[:needed]


def mock_embed(text: str, dimension: int = 64, model_id: str = "mock") -> EmbeddingVector:
    """Unit-norm pseudo-random vector deterministically derived from the text.

    Standard normals come from Box-Muller over hash-derived uniforms, so
    distinct texts land in near-orthogonal directions at moderate dimension.
    """
    if dimension < 2:
        raise ValueError("mock embedding dimension must be >= 2")
    pairs = (dimension + 1) // 2
    uniforms = _hash_uniforms(text, 2 * pairs)
    normals: list[float] = []
    for i in range(pairs):
        u1, u2 = uniforms[2 * i], uniforms[2 * i + 1]
        r = math.sqrt(-2.0 * math.log(u1))
        normals.append(r * math.cos(2.0 * math.pi * u2))
        normals.append(r * math.sin(2.0 * math.pi * u2))
    normals = normals[:dimension]
    norm = math.sqrt(math.fsum(v * v for v in normals))
    return EmbeddingVector(tuple(v / norm for v in normals), model_id=model_id)


class MockEmbeddingBackend:
    """Offline backend built on mock_embed; counts calls for cache tests."""

    kind = "mock"

    def __init__(self, dimension: int = 64, model_id: str = "mock"):
        self.dimension = dimension
        self.model_id = model_id
        self.calls = 0
        self.texts_embedded = 0

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        self.calls += 1
        self.texts_embedded += len(texts)
        return [mock_embed(t, self.dimension, self.model_id) for t in texts]


class HttpEmbeddingBackend:
    """Embeddings-endpoint transport with bounded in-flight requests."""

    kind = "http"

    def __init__(
        self,
        endpoint_url: str,
        model_id: str,
        api_key: str | None = None,
        max_in_flight: int = 4,
        retry_limit: int = 3,
        timeout: float = 120.0,
    ):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.max_in_flight = max_in_flight
        self.retry_limit = retry_limit
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        body = {"model": self.model_id, "input": list(texts)}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last: Exception | None = None
        for attempt in range(max(1, self.retry_limit)):
            with self._gate:
                try:
                    resp = requests.post(
                        f"{self.endpoint_url}/embeddings",
                        json=body,
                        headers=headers,
                        timeout=self.timeout,
                    )
                    resp.raise_for_status()
                    data = resp.json()["data"]
                    return [
                        EmbeddingVector(tuple(item["embedding"]), model_id=self.model_id)
                        for item in data
                    ]
                except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                    last = exc
                    log.warning("embedding request attempt %d failed: %s", attempt + 1, exc)
            time.sleep(min(2.0, 0.2 * (attempt + 1)))
        raise RuntimeError(f"embedding request failed after {self.retry_limit} attempts: {last}")


def embed_text(text: str, backend, cache: EmbeddingCache | None = None) -> EmbeddingVector:
    """Embed one text; a cache hit returns the stored vector with no backend
    call. Vectors are stored and returned exactly as produced."""
    if not text:
        raise ValueError("cannot embed empty text")
    if cache is not None:
        hit = cache.get(backend.model_id, text)
        if hit is not None:
            return hit
    key = cache_key(backend.model_id, text)
    try:
        vector = backend.embed([text])[0]
    except Exception as exc:
        raise EmbedFailed(key, exc) from exc
    if cache is not None:
        cache.put(backend.model_id, text, vector)
    return vector


def embed_batch(
    texts: Sequence[str], backend, cache: EmbeddingCache | None = None
) -> list[EmbeddingVector]:
    """Order-preserving batch embedding, element-wise identical to sequential
    embed_text calls; any failure fails the whole batch naming the index."""
    for i, text in enumerate(texts):
        if not text:
            raise ValueError(f"cannot embed empty text at batch index {i}")
    results: list[EmbeddingVector | None] = [None] * len(texts)
    misses: list[int] = []
    for i, text in enumerate(texts):
        hit = cache.get(backend.model_id, text) if cache is not None else None
        if hit is not None:
            results[i] = hit
        else:
            misses.append(i)
    if misses:
        miss_texts = [texts[i] for i in misses]
        try:
            vectors = backend.embed(miss_texts)
        except Exception as exc:
            raise EmbedFailed(cache_key(backend.model_id, miss_texts[0]), exc,
                              index=misses[0]) from exc
        for i, vec in zip(misses, vectors):
            results[i] = vec
            if cache is not None:
                cache.put(backend.model_id, texts[i], vec)
    return [r for r in results if r is not None]

"""Embedding clients: a wire protocol, an HTTP client, and an offline stand-in.

All clients return unit-normalized vectors of a fixed dimension. The hashing
embedder exists so every pipeline stage can run deterministically with no
model server; it is not a semantic model, but identical texts map to
identical vectors and token overlap moves cosine similarity in the right
direction, which is all the offline tests rely on.
"""

from __future__ import annotations

import hashlib
import re
import time
from typing import Callable, Optional, Protocol, Sequence

import requests

from .document import EmbeddingVector
from .errors import (
    ProviderError,
    ProviderTimeoutError,
    ProviderUnreachableError,
    ValidationFailedError,
)

DEFAULT_BATCH_SIZE = 32

_WORD_RE = re.compile(r"[a-z0-9]+")


class EmbeddingClient(Protocol):
    model_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        """Embed texts in order; output length equals input length."""
        ...


class HashingEmbedder:
    """Deterministic feature-hashing embedder (offline, no network).

    Unigrams and adjacent-word bigrams are hashed into ``dim`` signed
    buckets; the result is L2-normalized. Determinism comes from blake2b,
    so vectors are stable across processes and platforms.
    """

    def __init__(self, dim: int = 256, seed: int = 7, model_id: str = "hashing-v1"):
        if dim <= 0:
            raise ValidationFailedError("embedding dim must be positive")
        self.dim = dim
        self.model_id = model_id
        self._key = seed.to_bytes(8, "little", signed=False)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self._embed_one(t) for t in texts]

    def _embed_one(self, text: str) -> EmbeddingVector:
        buckets = [0.0] * self.dim
        words = _WORD_RE.findall(text.lower())
        features = list(words)
        features.extend(f"{a}_{b}" for a, b in zip(words, words[1:]))
        if not features:
            features = ["\x00" + text]
        for feat in features:
            digest = hashlib.blake2b(feat.encode("utf-8"), digest_size=8, key=self._key).digest()
            value = int.from_bytes(digest, "little")
            idx = value % self.dim
            sign = 1.0 if (value >> 63) & 1 else -1.0
            buckets[idx] += sign
        vec = EmbeddingVector(buckets)
        if vec.norm() == 0.0:
            # cancellation is possible in principle; perturb deterministically
            buckets[len(text) % self.dim] += 1.0
            vec = EmbeddingVector(buckets)
        return vec.normalized()


class HttpEmbeddingClient:
    """Client for an embedding service speaking ``POST /embed``.

    Request: ``{"model_id": ..., "texts": [...]}``; response:
    ``{"vectors": [[...], ...]}`` aligned with the request order. Vectors
    are re-normalized locally so downstream code can assume unit norm.
    """

    def __init__(
        self,
        base_url: str,
        model_id: str = "all-mpnet-base-v2",
        timeout: float = 30.0,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self._session = session or requests.Session()
        self.dim = -1  # learned from the first response

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            return []
        try:
            resp = self._session.post(
                f"{self.base_url}/embed",
                json={"model_id": self.model_id, "texts": list(texts)},
                timeout=self.timeout,
            )
        except requests.Timeout as exc:
            raise ProviderTimeoutError(f"embedding service timed out after {self.timeout}s") from exc
        except requests.ConnectionError as exc:
            raise ProviderUnreachableError(f"embedding service unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise ProviderUnreachableError(f"embedding service returned {resp.status_code}")
        if resp.status_code != 200:
            raise ValidationFailedError(f"embedding service rejected request: {resp.status_code}")
        payload = resp.json()
        rows = payload.get("vectors")
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise ValidationFailedError(
                f"embedding service returned {0 if not isinstance(rows, list) else len(rows)} "
                f"vectors for {len(texts)} texts"
            )
        out = [EmbeddingVector(row).normalized() for row in rows]
        dims = {v.dim for v in out}
        if len(dims) > 1:
            raise ValidationFailedError(f"embedding service returned mixed dims: {sorted(dims)}")
        if out:
            if self.dim == -1:
                self.dim = out[0].dim
            elif self.dim != out[0].dim:
                raise ValidationFailedError(
                    f"embedding dim changed from {self.dim} to {out[0].dim}"
                )
        return out


def embed_in_batches(
    client: EmbeddingClient,
    texts: Sequence[str],
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_retries: int = 2,
    sleep: Callable[[float], None] = time.sleep,
) -> list[EmbeddingVector]:
    """Embed ``texts`` in fixed-size batches with per-batch retry.

    Only retryable provider failures are retried (with exponential backoff);
    anything else propagates immediately. Output order matches input order.
    """
    if batch_size <= 0:
        raise ValidationFailedError("batch_size must be positive")
    out: list[EmbeddingVector] = []
    for start in range(0, len(texts), batch_size):
        batch = list(texts[start : start + batch_size])
        attempt = 0
        while True:
            try:
                out.extend(client.embed(batch))
                break
            except ProviderError as exc:
                if not exc.retryable or attempt >= max_retries:
                    raise
                sleep(0.25 * (2**attempt))
                attempt += 1
    return out

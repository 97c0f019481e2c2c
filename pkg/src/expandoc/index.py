"""In-memory vector index with exact top-k search and JSONL persistence.

One index holds one granularity (chunks or paragraphs) at one dimension.
Entries are keyed by (paper_id, ordinal); upserting an existing key replaces
it. Search is an exact full scan over one paper's entries, so a brute-force
reimplementation must rank identically: ties on score break toward the lower
ordinal.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .document import EmbeddingVector
from .errors import DimensionMismatchError, ValidationFailedError, ZeroVectorError

INDEX_FORMAT_VERSION = 1

GRANULARITIES = ("chunk", "paragraph")


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in float64; rejects dim mismatches and zero vectors."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cosine over mismatched dims: {a.dim} vs {b.dim}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine undefined for zero vector")
    return float(np.dot(av, bv) / (na * nb))


@dataclass(frozen=True)
class IndexEntry:
    paper_id: str
    ordinal: int
    text: str
    vector: EmbeddingVector
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RetrievalResult:
    paper_id: str
    ordinal: int
    score: float
    text: str
    meta: dict = field(default_factory=dict)


class VectorIndex:
    """Thread-safe exact-search index over unit-normalized vectors."""

    def __init__(self, granularity: str, dim: int):
        if granularity not in GRANULARITIES:
            raise ValidationFailedError(f"unknown granularity: {granularity!r}")
        if dim <= 0:
            raise ValidationFailedError("index dim must be positive")
        self.granularity = granularity
        self.dim = dim
        self._by_paper: dict[str, dict[int, IndexEntry]] = {}
        # per-paper score matrix, rebuilt lazily after mutations
        self._matrices: dict[str, tuple[list[int], np.ndarray]] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._by_paper.values())

    def paper_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._by_paper)

    def count(self, paper_id: str) -> int:
        with self._lock:
            return len(self._by_paper.get(paper_id, {}))

    def upsert(self, entries: Iterable[IndexEntry]) -> None:
        """Insert or replace entries; vectors are normalized on the way in."""
        with self._lock:
            for entry in entries:
                if entry.vector is None:
                    raise ValidationFailedError(
                        f"entry ({entry.paper_id}, {entry.ordinal}) has no vector"
                    )
                if entry.vector.dim != self.dim:
                    raise DimensionMismatchError(
                        f"entry ({entry.paper_id}, {entry.ordinal}) has dim "
                        f"{entry.vector.dim}, index expects {self.dim}"
                    )
                normalized = entry.vector.normalized()
                stored = IndexEntry(
                    paper_id=entry.paper_id,
                    ordinal=entry.ordinal,
                    text=entry.text,
                    vector=normalized,
                    meta=dict(entry.meta),
                )
                self._by_paper.setdefault(entry.paper_id, {})[entry.ordinal] = stored
                self._matrices.pop(entry.paper_id, None)

    def delete_paper(self, paper_id: str) -> int:
        with self._lock:
            removed = len(self._by_paper.pop(paper_id, {}))
            self._matrices.pop(paper_id, None)
            return removed

    def get(self, paper_id: str, ordinal: int) -> Optional[IndexEntry]:
        with self._lock:
            return self._by_paper.get(paper_id, {}).get(ordinal)

    def entries_for(self, paper_id: str) -> list[IndexEntry]:
        with self._lock:
            bucket = self._by_paper.get(paper_id, {})
            return [bucket[o] for o in sorted(bucket)]

    def top_k(self, query: EmbeddingVector, paper_id: str, k: int) -> list[RetrievalResult]:
        """Exact top-k by cosine, ties broken by ascending ordinal.

        Returns fewer than k results when the paper has fewer entries.
        """
        if k <= 0:
            raise ValidationFailedError(f"k must be positive, got {k}")
        if query.dim != self.dim:
            raise DimensionMismatchError(
                f"query dim {query.dim} does not match index dim {self.dim}"
            )
        q = query.values.astype(np.float64)
        qn = np.linalg.norm(q)
        if qn == 0.0:
            raise ZeroVectorError("cannot search with a zero query vector")
        q = q / qn

        with self._lock:
            bucket = self._by_paper.get(paper_id, {})
            if not bucket:
                return []
            cached = self._matrices.get(paper_id)
            if cached is None:
                ordinals = sorted(bucket)
                matrix = np.stack(
                    [bucket[o].vector.values.astype(np.float64) for o in ordinals]
                )
                cached = (ordinals, matrix)
                self._matrices[paper_id] = cached
            ordinals, matrix = cached
            entries = [bucket[o] for o in ordinals]

        # rowwise reduce so each score is a pure function of its own row:
        # blocked matmul kernels can round remainder rows differently, which
        # would break exact ties between duplicate vectors
        scores = (matrix * q).sum(axis=1)
        order = sorted(range(len(ordinals)), key=lambda i: (-scores[i], ordinals[i]))
        out = []
        for i in order[:k]:
            e = entries[i]
            out.append(
                RetrievalResult(
                    paper_id=e.paper_id,
                    ordinal=e.ordinal,
                    score=float(scores[i]),
                    text=e.text,
                    meta=dict(e.meta),
                )
            )
        return out

    def argmax(self, query: EmbeddingVector, paper_id: str) -> Optional[RetrievalResult]:
        hits = self.top_k(query, paper_id, k=1)
        return hits[0] if hits else None

    # --- persistence ---------------------------------------------------

    def to_rows(self, paper_id: Optional[str] = None) -> list[dict]:
        """Entry rows in (paper_id, ordinal) order, ready for JSONL."""
        with self._lock:
            papers = [paper_id] if paper_id is not None else sorted(self._by_paper)
            rows = []
            for pid in papers:
                bucket = self._by_paper.get(pid, {})
                for ordinal in sorted(bucket):
                    e = bucket[ordinal]
                    rows.append(
                        {
                            "paper_id": e.paper_id,
                            "ordinal": e.ordinal,
                            "text": e.text,
                            "vector": e.vector.tolist(),
                            "meta": e.meta,
                        }
                    )
            return rows

    def add_rows(self, rows: Iterable[dict]) -> None:
        self.upsert(
            IndexEntry(
                paper_id=row["paper_id"],
                ordinal=row["ordinal"],
                text=row["text"],
                vector=EmbeddingVector(row["vector"]),
                meta=row.get("meta", {}),
            )
            for row in rows
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        header = {
            "version": INDEX_FORMAT_VERSION,
            "granularity": self.granularity,
            "dim": self.dim,
        }
        tmp = path.with_suffix(path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for row in self.to_rows():
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise ValidationFailedError(f"index file {path} is empty")
            header = json.loads(header_line)
            version = header.get("version")
            if version != INDEX_FORMAT_VERSION:
                raise ValidationFailedError(
                    f"index file {path} has version {version!r}, "
                    f"expected {INDEX_FORMAT_VERSION}"
                )
            idx = cls(granularity=header["granularity"], dim=header["dim"])
            idx.add_rows(json.loads(line) for line in fh if line.strip())
        return idx

"""Paper ingestion: parse, segment, chunk, embed, and index.

Chunks are sliding windows over the body sentence stream. With window size
``z`` and overlap ``v`` the stride is ``z - v``; windows start at 0 and every
``stride`` after that while a full window fits, plus one trailing window
ending at the last sentence when the stride would otherwise skip it. A body
shorter than one window yields a single undersized chunk; an empty body
yields none. The abstract is deliberately never chunked: expansion questions
ask for what the abstract does not say, so retrieval must not be able to
answer them from the abstract itself.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Optional

import requests

from .document import (
    Chunk,
    DocumentMeta,
    PaperDocument,
    ParagraphRecord,
    build_document,
    validate_document,
)
from .embedding import DEFAULT_BATCH_SIZE, EmbeddingClient, embed_in_batches
from .errors import (
    ParserOutputInvalidError,
    ProviderTimeoutError,
    ProviderUnreachableError,
    ValidationFailedError,
)
from .index import IndexEntry, VectorIndex
from .segmentation import segment_sentences


@dataclass(frozen=True)
class IngestionConfig:
    chunk_size: int = 3
    chunk_overlap: int = 2
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ValidationFailedError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise ValidationFailedError(
                f"chunk_overlap must satisfy 0 <= overlap < size, got "
                f"overlap={self.chunk_overlap} size={self.chunk_size}"
            )
        if self.batch_size < 1:
            raise ValidationFailedError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ParserOutput:
    """What the external PDF parser hands back, before segmentation."""

    title: str
    abstract_text: str
    paragraphs: list[tuple[Optional[str], str, Optional[int]]]  # (section, text, page)
    metadata: DocumentMeta = field(default_factory=DocumentMeta)


@dataclass(frozen=True)
class IngestResult:
    document: PaperDocument
    chunks: list[Chunk]
    paragraph_records: list[ParagraphRecord]
    stats: dict


def derive_paper_id(source_uri: str) -> str:
    """Stable id from the source location, so re-ingest lands on the same paper."""
    if not source_uri or not source_uri.strip():
        raise ValidationFailedError("source_uri must be non-empty")
    return "p" + hashlib.sha1(source_uri.encode("utf-8")).hexdigest()[:12]


def chunk_starts(n_sentences: int, size: int, overlap: int) -> list[int]:
    """Window start offsets for a body of ``n_sentences`` sentences."""
    if n_sentences <= 0:
        return []
    if n_sentences <= size:
        return [0]
    stride = size - overlap
    starts = list(range(0, n_sentences - size + 1, stride))
    if starts[-1] + size < n_sentences:
        starts.append(n_sentences - size)
    return starts


def build_chunks(doc: PaperDocument, config: IngestionConfig) -> list[Chunk]:
    """Materialize sliding-window chunks (without embeddings) for a document."""
    sentences = list(doc.body_sentences())
    n = len(sentences)
    chunks: list[Chunk] = []
    for chunk_index, start in enumerate(chunk_starts(n, config.chunk_size, config.chunk_overlap)):
        end = min(start + config.chunk_size, n)
        window = sentences[start:end]
        paragraph_indices = sorted({s.paragraph_index for s in window})
        chunks.append(
            Chunk(
                paper_id=doc.paper_id,
                chunk_index=chunk_index,
                sentence_span=(start, end),
                text=" ".join(s.text for s in window),
                paragraph_indices=tuple(paragraph_indices),
            )
        )
    return chunks


def build_paragraph_records(doc: PaperDocument) -> list[ParagraphRecord]:
    return [
        ParagraphRecord(paper_id=doc.paper_id, paragraph_index=p.paragraph_index, text=p.text)
        for p in doc.body_paragraphs
    ]


def document_from_parser_output(
    parsed: ParserOutput, paper_id: str, source_uri: Optional[str] = None
) -> PaperDocument:
    """Segment parser output into the canonical document model."""
    if not parsed.abstract_text or not parsed.abstract_text.strip():
        raise ParserOutputInvalidError("parser output has no abstract")
    abstract = segment_sentences(parsed.abstract_text)
    paragraphs = []
    for section, text, page in parsed.paragraphs:
        if not text or not text.strip():
            continue  # parsers emit empty blocks around figures; drop them
        paragraphs.append((section, segment_sentences(text), page))
    doc = build_document(
        paper_id=paper_id,
        title=parsed.title.strip(),
        abstract_sentences=abstract,
        paragraphs=paragraphs,
        source_uri=source_uri,
        metadata=parsed.metadata,
    )
    violations = validate_document(doc)
    if violations:
        raise ValidationFailedError("document invalid: " + "; ".join(violations))
    return doc


def ingest_document(
    doc: PaperDocument,
    config: IngestionConfig,
    embedder: EmbeddingClient,
    chunk_index: VectorIndex,
    paragraph_index: VectorIndex,
) -> IngestResult:
    """Chunk, embed, and index a document; the index swap is all-or-nothing.

    Every text is embedded before either index is touched, so a provider
    failure mid-batch leaves previously indexed state intact. Re-ingesting a
    paper_id replaces its entries wholesale.
    """
    started = time.monotonic()
    violations = validate_document(doc)
    if violations:
        raise ValidationFailedError("document invalid: " + "; ".join(violations))

    chunks = build_chunks(doc, config)
    paragraph_records = build_paragraph_records(doc)

    texts = [c.text for c in chunks] + [p.text for p in paragraph_records]
    vectors = embed_in_batches(embedder, texts, batch_size=config.batch_size)
    chunk_vectors = vectors[: len(chunks)]
    paragraph_vectors = vectors[len(chunks) :]

    chunk_index.delete_paper(doc.paper_id)
    paragraph_index.delete_paper(doc.paper_id)
    chunk_index.upsert(
        IndexEntry(
            paper_id=c.paper_id,
            ordinal=c.chunk_index,
            text=c.text,
            vector=v,
            meta={"sentence_span": list(c.sentence_span), "paragraphs": list(c.paragraph_indices)},
        )
        for c, v in zip(chunks, chunk_vectors)
    )
    paragraph_index.upsert(
        IndexEntry(
            paper_id=p.paper_id,
            ordinal=p.paragraph_index,
            text=p.text,
            vector=v,
            meta={"section": doc.body_paragraphs[p.paragraph_index].section_label},
        )
        for p, v in zip(paragraph_records, paragraph_vectors)
    )

    stats = {
        "paper_id": doc.paper_id,
        "sentences": doc.body_sentence_count,
        "chunks": len(chunks),
        "paragraphs": len(paragraph_records),
        "embedding_dim": vectors[0].dim if vectors else None,
        "elapsed_s": round(time.monotonic() - started, 4),
    }
    return IngestResult(
        document=doc, chunks=chunks, paragraph_records=paragraph_records, stats=stats
    )


class ParserServiceClient:
    """HTTP client for the external PDF-parsing service.

    Wire contract: ``POST {base}/parse`` with ``{"uri": ...}`` returns
    ``{"title", "abstract", "sections": [{"heading", "paragraphs":
    [{"text", "page"?}]}], "metadata"?}``. Sections are flattened into a
    paragraph list, with each paragraph tagged by its section heading.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def fetch(self, source_uri: str) -> ParserOutput:
        try:
            resp = self._session.post(
                f"{self.base_url}/parse", json={"uri": source_uri}, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise ProviderTimeoutError(f"parser service timed out after {self.timeout}s") from exc
        except requests.ConnectionError as exc:
            raise ProviderUnreachableError(f"parser service unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise ProviderUnreachableError(f"parser service returned {resp.status_code}")
        if resp.status_code != 200:
            raise ParserOutputInvalidError(
                f"parser service rejected {source_uri!r}: {resp.status_code}"
            )
        return parse_service_payload(resp.json())

    def fetch_bytes(self, data: bytes) -> ParserOutput:
        try:
            resp = self._session.post(
                f"{self.base_url}/parse",
                data=data,
                headers={"Content-Type": "application/pdf"},
                timeout=self.timeout,
            )
        except requests.Timeout as exc:
            raise ProviderTimeoutError(f"parser service timed out after {self.timeout}s") from exc
        except requests.ConnectionError as exc:
            raise ProviderUnreachableError(f"parser service unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise ProviderUnreachableError(f"parser service returned {resp.status_code}")
        if resp.status_code != 200:
            raise ParserOutputInvalidError(f"parser service rejected upload: {resp.status_code}")
        return parse_service_payload(resp.json())


def parse_service_payload(payload: dict) -> ParserOutput:
    if not isinstance(payload, dict):
        raise ParserOutputInvalidError("parser payload must be a JSON object")
    title = payload.get("title")
    abstract = payload.get("abstract")
    sections = payload.get("sections")
    if not isinstance(title, str) or not title.strip():
        raise ParserOutputInvalidError("parser payload missing title")
    if not isinstance(abstract, str) or not abstract.strip():
        raise ParserOutputInvalidError("parser payload missing abstract")
    if not isinstance(sections, list):
        raise ParserOutputInvalidError("parser payload missing sections")
    paragraphs: list[tuple[Optional[str], str, Optional[int]]] = []
    for section in sections:
        heading = section.get("heading")
        for para in section.get("paragraphs", []):
            text = para.get("text", "")
            if isinstance(text, str) and text.strip():
                paragraphs.append((heading, text, para.get("page")))
    meta = payload.get("metadata") or {}
    return ParserOutput(
        title=title,
        abstract_text=abstract,
        paragraphs=paragraphs,
        metadata=DocumentMeta(
            authors=meta.get("authors"), venue=meta.get("venue"), year=meta.get("year")
        ),
    )

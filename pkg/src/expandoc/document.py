"""Canonical paper representation and its derived retrieval units.

A paper is an abstract (a list of sentences) plus body paragraphs, each
segmented into sentences. Body sentences carry one gapless global index
stream; the abstract keeps its own index space and is never chunked, so the
system cannot answer a clarification question from the text being clarified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

CANONICAL_VERSION = 1

# Paragraph text is the single-space join of its member sentences; the same
# separator is used everywhere text is reassembled so attribution matching
# stays exact.
SENTENCE_SEPARATOR = " "


class EmbeddingVector:
    """Fixed-length real vector; float32, read-only after construction."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float32).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.astype(np.float64)))

    def normalized(self) -> "EmbeddingVector":
        n = self.norm()
        if n == 0.0:
            from .errors import ZeroVectorError

            raise ZeroVectorError("cannot normalize an all-zero vector")
        return EmbeddingVector(self.values.astype(np.float64) / n)

    def tolist(self) -> list[float]:
        return [float(v) for v in self.values]

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        return isinstance(other, EmbeddingVector) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim})"


@dataclass(frozen=True)
class Sentence:
    """One sentence; ``paragraph_index`` is None for abstract sentences."""

    sentence_index: int
    text: str
    paragraph_index: Optional[int] = None


@dataclass(frozen=True)
class Paragraph:
    paragraph_index: int
    sentences: tuple[Sentence, ...]
    section_label: Optional[str] = None
    page_anchor: Optional[int] = None

    @property
    def sentence_span(self) -> tuple[int, int]:
        """[first_sentence_index, last_sentence_index], inclusive."""
        return (self.sentences[0].sentence_index, self.sentences[-1].sentence_index)

    @property
    def text(self) -> str:
        return SENTENCE_SEPARATOR.join(s.text for s in self.sentences)


@dataclass(frozen=True)
class DocumentMeta:
    authors: Optional[str] = None
    venue: Optional[str] = None
    year: Optional[str] = None


@dataclass(frozen=True)
class PaperDocument:
    paper_id: str
    title: str
    abstract_sentences: tuple[Sentence, ...]
    body_paragraphs: tuple[Paragraph, ...]
    source_uri: Optional[str] = None
    metadata: DocumentMeta = field(default_factory=DocumentMeta)

    def body_sentences(self) -> Iterator[Sentence]:
        for para in self.body_paragraphs:
            yield from para.sentences

    @property
    def body_sentence_count(self) -> int:
        return sum(len(p.sentences) for p in self.body_paragraphs)

    @property
    def abstract_text(self) -> str:
        """The abstract as displayed (and as anchored by entity offsets)."""
        return SENTENCE_SEPARATOR.join(s.text for s in self.abstract_sentences)


@dataclass(frozen=True)
class Chunk:
    """Sliding-window retrieval unit over the body sentence stream.

    ``sentence_span`` is a half-open [start, end) interval of global body
    sentence indices. ``paragraph_indices`` records which paragraphs the
    window touches, for display purposes only.
    """

    paper_id: str
    chunk_index: int
    sentence_span: tuple[int, int]
    text: str
    paragraph_indices: tuple[int, ...] = ()
    embedding: Optional[EmbeddingVector] = None

    @property
    def chunk_id(self) -> tuple[str, int]:
        return (self.paper_id, self.chunk_index)


@dataclass(frozen=True)
class ParagraphRecord:
    """Paragraph-granularity retrieval unit used for attribution."""

    paper_id: str
    paragraph_index: int
    text: str
    embedding: Optional[EmbeddingVector] = None

    @property
    def paragraph_ref(self) -> tuple[str, int]:
        return (self.paper_id, self.paragraph_index)


def build_document(
    paper_id: str,
    title: str,
    abstract_sentences: list[str],
    paragraphs: list[tuple[Optional[str], list[str], Optional[int]]],
    source_uri: Optional[str] = None,
    metadata: Optional[DocumentMeta] = None,
) -> PaperDocument:
    """Assemble a PaperDocument, assigning gapless sentence indices.

    ``paragraphs`` is a list of (section_label, sentence_texts, page_anchor).
    """
    abstract = tuple(
        Sentence(sentence_index=i, text=t, paragraph_index=None)
        for i, t in enumerate(abstract_sentences)
    )
    body: list[Paragraph] = []
    next_index = 0
    for p_idx, (section, texts, page) in enumerate(paragraphs):
        sents = tuple(
            Sentence(sentence_index=next_index + j, text=t, paragraph_index=p_idx)
            for j, t in enumerate(texts)
        )
        next_index += len(texts)
        body.append(
            Paragraph(paragraph_index=p_idx, sentences=sents, section_label=section, page_anchor=page)
        )
    return PaperDocument(
        paper_id=paper_id,
        title=title,
        abstract_sentences=abstract,
        body_paragraphs=tuple(body),
        source_uri=source_uri,
        metadata=metadata or DocumentMeta(),
    )


def validate_document(doc: PaperDocument) -> list[str]:
    """Collect invariant violations; an empty list means the document is valid."""
    violations: list[str] = []

    if not doc.abstract_sentences:
        violations.append("abstract_sentences empty")
    for i, sent in enumerate(doc.abstract_sentences):
        if sent.sentence_index != i:
            violations.append(f"abstract sentence gap at index {i}")
        if sent.paragraph_index is not None:
            violations.append(f"abstract sentence {i} claims paragraph {sent.paragraph_index}")
        _check_sentence_text(sent, violations, where=f"abstract[{i}]")

    expected = 0
    for para in doc.body_paragraphs:
        if not para.sentences:
            violations.append(f"paragraph {para.paragraph_index} has no sentences")
            continue
        for sent in para.sentences:
            if sent.sentence_index != expected:
                violations.append(f"gap at index {expected}")
            expected = sent.sentence_index + 1
            if sent.paragraph_index != para.paragraph_index:
                violations.append(
                    f"sentence {sent.sentence_index} owned by paragraph "
                    f"{sent.paragraph_index}, found in {para.paragraph_index}"
                )
            _check_sentence_text(sent, violations, where=f"sentence[{sent.sentence_index}]")

    for pos, para in enumerate(doc.body_paragraphs):
        if para.paragraph_index != pos:
            violations.append(f"paragraph index {para.paragraph_index} at position {pos}")

    return violations


def _check_sentence_text(sent: Sentence, violations: list[str], where: str) -> None:
    if not sent.text:
        violations.append(f"{where} text empty")
    elif sent.text != sent.text.strip():
        violations.append(f"{where} text has leading/trailing whitespace")


def document_to_canonical(doc: PaperDocument) -> dict:
    """Serialize to the versioned canonical JSON object (the wire contract)."""
    return {
        "version": CANONICAL_VERSION,
        "paper_id": doc.paper_id,
        "title": doc.title,
        "abstract": [s.text for s in doc.abstract_sentences],
        "paragraphs": [
            {
                "index": p.paragraph_index,
                "section": p.section_label,
                "page": p.page_anchor,
                "sentences": [s.text for s in p.sentences],
            }
            for p in doc.body_paragraphs
        ],
        "metadata": {
            "authors": doc.metadata.authors,
            "venue": doc.metadata.venue,
            "year": doc.metadata.year,
        },
        "source_uri": doc.source_uri,
    }


def document_from_canonical(payload: dict) -> PaperDocument:
    """Rebuild a PaperDocument from canonical JSON; fails on version mismatch."""
    from .errors import ValidationFailedError

    if not isinstance(payload, dict):
        raise ValidationFailedError("canonical document must be a JSON object")
    version = payload.get("version")
    if version != CANONICAL_VERSION:
        raise ValidationFailedError(
            f"unsupported canonical document version: {version!r} (expected {CANONICAL_VERSION})"
        )
    for key in ("paper_id", "title", "abstract", "paragraphs"):
        if key not in payload:
            raise ValidationFailedError(f"canonical document missing field: {key}")

    meta = payload.get("metadata") or {}
    paragraphs = [
        (p.get("section"), list(p.get("sentences", [])), p.get("page"))
        for p in payload["paragraphs"]
    ]
    return build_document(
        paper_id=payload["paper_id"],
        title=payload["title"],
        abstract_sentences=list(payload["abstract"]),
        paragraphs=paragraphs,
        source_uri=payload.get("source_uri"),
        metadata=DocumentMeta(
            authors=meta.get("authors"), venue=meta.get("venue"), year=meta.get("year")
        ),
    )

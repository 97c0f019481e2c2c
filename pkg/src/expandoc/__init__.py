"""expandoc: recursively expandable paper abstracts.

Extracts expandable entities from an abstract, answers anchored
clarification questions with retrieval-augmented generation over the paper's
full text, attaches paragraph-level attribution, and maintains per-session
expansion trees.
"""

from .config import Settings, load_settings
from .document import (
    CANONICAL_VERSION,
    Chunk,
    DocumentMeta,
    EmbeddingVector,
    PaperDocument,
    Paragraph,
    ParagraphRecord,
    Sentence,
    build_document,
    document_from_canonical,
    document_to_canonical,
    validate_document,
)
from .embedding import HashingEmbedder, HttpEmbeddingClient, embed_in_batches
from .engine import (
    Attribution,
    ExpandableEntity,
    ExpandOutcome,
    ExpansionEngine,
    ExpansionNode,
    ExpansionTree,
    resolve_question,
)
from .errors import EXIT_CODES, ExpandocError
from .index import IndexEntry, RetrievalResult, VectorIndex, cosine
from .ingestion import (
    IngestionConfig,
    ParserOutput,
    build_chunks,
    build_paragraph_records,
    chunk_starts,
    derive_paper_id,
    ingest_document,
)
from .llm import (
    Answer,
    CannedProvider,
    Gateway,
    GenerationParams,
    MockProvider,
    NoAnswer,
    load_template,
    parse_answer,
    parse_entity_list,
    render_prompt,
)
from .segmentation import segment_sentences
from .service import ExpandocService
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "Attribution",
    "CANONICAL_VERSION",
    "CannedProvider",
    "Chunk",
    "DocumentMeta",
    "EXIT_CODES",
    "EmbeddingVector",
    "ExpandOutcome",
    "ExpandableEntity",
    "ExpandocError",
    "ExpandocService",
    "ExpansionEngine",
    "ExpansionNode",
    "ExpansionTree",
    "Gateway",
    "GenerationParams",
    "HashingEmbedder",
    "HttpEmbeddingClient",
    "IndexEntry",
    "IngestionConfig",
    "MockProvider",
    "NoAnswer",
    "PaperDocument",
    "Paragraph",
    "ParagraphRecord",
    "ParserOutput",
    "RetrievalResult",
    "Sentence",
    "Settings",
    "Store",
    "VectorIndex",
    "build_chunks",
    "build_document",
    "build_paragraph_records",
    "chunk_starts",
    "cosine",
    "derive_paper_id",
    "document_from_canonical",
    "document_to_canonical",
    "embed_in_batches",
    "ingest_document",
    "load_settings",
    "load_template",
    "parse_answer",
    "parse_entity_list",
    "render_prompt",
    "resolve_question",
    "segment_sentences",
    "validate_document",
    "__version__",
]

"""Ingestion pipeline: parser handling, indexing, and failure atomicity."""

import pytest
import requests

from expandoc.document import DocumentMeta, build_document
from expandoc.embedding import HashingEmbedder
from expandoc.errors import (
    ParserOutputInvalidError,
    ProviderTimeoutError,
    ProviderUnreachableError,
    ValidationFailedError,
)
from expandoc.index import VectorIndex
from expandoc.ingestion import (
    IngestionConfig,
    ParserOutput,
    ParserServiceClient,
    derive_paper_id,
    document_from_parser_output,
    ingest_document,
    parse_service_payload,
)


def _indices(dim=32):
    return VectorIndex(granularity="chunk", dim=dim), VectorIndex(granularity="paragraph", dim=dim)


def _doc(paper_id="p1", n_body=6):
    paragraphs = [
        ("Intro", [f"Intro sentence {i} text." for i in range(n_body // 2)], 1),
        ("Eval", [f"Eval sentence {i} text." for i in range(n_body - n_body // 2)], 2),
    ]
    return build_document(paper_id, "Title", ["Abstract sentence."], paragraphs)


class TestDerivePaperId:
    def test_stable(self):
        assert derive_paper_id("arxiv:1234") == derive_paper_id("arxiv:1234")

    def test_distinct_sources_distinct_ids(self):
        assert derive_paper_id("a") != derive_paper_id("b")

    def test_shape(self):
        pid = derive_paper_id("fixture:x")
        assert pid.startswith("p") and len(pid) == 13

    def test_empty_rejected(self):
        with pytest.raises(ValidationFailedError):
            derive_paper_id("  ")


class TestDocumentFromParserOutput:
    def test_segments_and_builds(self):
        parsed = ParserOutput(
            title="  A Title  ",
            abstract_text="First abstract sentence. Second one.",
            paragraphs=[("Intro", "Body one. Body two.", 1), (None, "Body three.", None)],
            metadata=DocumentMeta(authors="A"),
        )
        doc = document_from_parser_output(parsed, "p1", source_uri="u")
        assert doc.title == "A Title"
        assert [s.text for s in doc.abstract_sentences] == [
            "First abstract sentence.",
            "Second one.",
        ]
        assert doc.body_sentence_count == 3
        assert doc.metadata.authors == "A"

    def test_empty_blocks_dropped(self):
        parsed = ParserOutput(
            title="T",
            abstract_text="A.",
            paragraphs=[("Intro", "Kept.", 1), ("Fig", "   ", 1), ("Eval", "", 2)],
        )
        doc = document_from_parser_output(parsed, "p1")
        assert len(doc.body_paragraphs) == 1

    def test_missing_abstract_rejected(self):
        parsed = ParserOutput(title="T", abstract_text="  ", paragraphs=[])
        with pytest.raises(ParserOutputInvalidError):
            document_from_parser_output(parsed, "p1")


class TestIngestDocument:
    def test_stats_and_population(self):
        chunk_index, paragraph_index = _indices()
        result = ingest_document(
            _doc(n_body=8), IngestionConfig(), HashingEmbedder(dim=32), chunk_index, paragraph_index
        )
        assert result.stats["sentences"] == 8
        assert result.stats["chunks"] == 6  # S - 2
        assert result.stats["paragraphs"] == 2
        assert result.stats["embedding_dim"] == 32
        assert chunk_index.count("p1") == 6
        assert paragraph_index.count("p1") == 2

    def test_chunk_meta_spans(self):
        chunk_index, paragraph_index = _indices()
        ingest_document(
            _doc(), IngestionConfig(), HashingEmbedder(dim=32), chunk_index, paragraph_index
        )
        first = chunk_index.get("p1", 0)
        assert first.meta["sentence_span"] == [0, 3]
        assert first.meta["paragraphs"] == [0]

    def test_paragraph_meta_section(self):
        chunk_index, paragraph_index = _indices()
        ingest_document(
            _doc(), IngestionConfig(), HashingEmbedder(dim=32), chunk_index, paragraph_index
        )
        assert paragraph_index.get("p1", 0).meta["section"] == "Intro"
        assert paragraph_index.get("p1", 1).meta["section"] == "Eval"

    def test_reingest_replaces_wholesale(self):
        chunk_index, paragraph_index = _indices()
        embedder = HashingEmbedder(dim=32)
        ingest_document(_doc(n_body=10), IngestionConfig(), embedder, chunk_index, paragraph_index)
        assert chunk_index.count("p1") == 8
        ingest_document(_doc(n_body=4), IngestionConfig(), embedder, chunk_index, paragraph_index)
        assert chunk_index.count("p1") == 2
        assert paragraph_index.count("p1") == 2

    def test_embedder_failure_leaves_indices_untouched(self):
        """All texts are embedded before any index mutation."""
        chunk_index, paragraph_index = _indices()
        embedder = HashingEmbedder(dim=32)
        ingest_document(_doc(n_body=6), IngestionConfig(), embedder, chunk_index, paragraph_index)
        before_chunks = [e.ordinal for e in chunk_index.entries_for("p1")]
        before_texts = [e.text for e in chunk_index.entries_for("p1")]

        class FailsMidway:
            model_id = "failing"
            dim = 32

            def __init__(self):
                self.calls = 0

            def embed(self, texts):
                self.calls += 1
                if self.calls >= 2:
                    raise ValidationFailedError("hard failure mid-ingest")
                return HashingEmbedder(dim=32).embed(texts)

        with pytest.raises(ValidationFailedError):
            ingest_document(
                _doc(n_body=40),  # enough texts to need several batches
                IngestionConfig(batch_size=8),
                FailsMidway(),
                chunk_index,
                paragraph_index,
            )
        assert [e.ordinal for e in chunk_index.entries_for("p1")] == before_chunks
        assert [e.text for e in chunk_index.entries_for("p1")] == before_texts

    def test_invalid_document_rejected_before_embedding(self):
        chunk_index, paragraph_index = _indices()

        class MustNotBeCalled:
            model_id = "never"
            dim = 32

            def embed(self, texts):
                raise AssertionError("embedder called for invalid document")

        bad = build_document("p1", "T", [], [("S", ["Body."], None)])
        with pytest.raises(ValidationFailedError):
            ingest_document(bad, IngestionConfig(), MustNotBeCalled(), chunk_index, paragraph_index)

    def test_empty_body_ingests_with_zero_chunks(self):
        chunk_index, paragraph_index = _indices()
        doc = build_document("p1", "T", ["Only an abstract."], [])
        result = ingest_document(
            doc, IngestionConfig(), HashingEmbedder(dim=32), chunk_index, paragraph_index
        )
        assert result.stats["chunks"] == 0
        assert result.stats["paragraphs"] == 0


class _FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def json(self):
        return self._payload


class _FakeSession:
    def __init__(self, response=None, exc=None):
        self.response = response
        self.exc = exc
        self.requests = []

    def post(self, url, json=None, data=None, headers=None, timeout=None):
        self.requests.append(
            {"url": url, "json": json, "data": data, "headers": headers, "timeout": timeout}
        )
        if self.exc is not None:
            raise self.exc
        return self.response


_GOOD_PARSE = {
    "title": "T",
    "abstract": "Abstract sentence.",
    "sections": [
        {"heading": "Intro", "paragraphs": [{"text": "Body one. Body two.", "page": 1}]},
        {"heading": "Eval", "paragraphs": [{"text": "Body three."}]},
    ],
    "metadata": {"authors": "A. B."},
}


class TestParserServiceClient:
    def test_fetch_wire_and_flattening(self):
        session = _FakeSession(_FakeResponse(payload=_GOOD_PARSE))
        client = ParserServiceClient("http://parser", session=session)
        parsed = client.fetch("arxiv:1")
        assert session.requests[0]["url"] == "http://parser/parse"
        assert session.requests[0]["json"] == {"uri": "arxiv:1"}
        assert parsed.title == "T"
        assert parsed.paragraphs == [
            ("Intro", "Body one. Body two.", 1),
            ("Eval", "Body three.", None),
        ]
        assert parsed.metadata.authors == "A. B."

    def test_fetch_bytes_sends_pdf_content_type(self):
        session = _FakeSession(_FakeResponse(payload=_GOOD_PARSE))
        client = ParserServiceClient("http://parser", session=session)
        client.fetch_bytes(b"%PDF-1.5 fake")
        sent = session.requests[0]
        assert sent["data"] == b"%PDF-1.5 fake"
        assert sent["headers"] == {"Content-Type": "application/pdf"}

    def test_timeout_maps(self):
        client = ParserServiceClient("http://parser", session=_FakeSession(exc=requests.Timeout()))
        with pytest.raises(ProviderTimeoutError):
            client.fetch("x")

    def test_5xx_maps_to_unreachable(self):
        client = ParserServiceClient(
            "http://parser", session=_FakeSession(_FakeResponse(status_code=502))
        )
        with pytest.raises(ProviderUnreachableError):
            client.fetch("x")

    def test_4xx_maps_to_parser_invalid(self):
        client = ParserServiceClient(
            "http://parser", session=_FakeSession(_FakeResponse(status_code=415))
        )
        with pytest.raises(ParserOutputInvalidError):
            client.fetch_bytes(b"not a pdf")


class TestParseServicePayload:
    @pytest.mark.parametrize(
        "mutate",
        [
            lambda p: p.pop("title"),
            lambda p: p.update(title="  "),
            lambda p: p.pop("abstract"),
            lambda p: p.pop("sections"),
            lambda p: p.update(sections="not a list"),
        ],
    )
    def test_malformed_rejected(self, mutate):
        payload = {k: (v.copy() if isinstance(v, (dict, list)) else v) for k, v in _GOOD_PARSE.items()}
        mutate(payload)
        with pytest.raises(ParserOutputInvalidError):
            parse_service_payload(payload)

    def test_non_dict_rejected(self):
        with pytest.raises(ParserOutputInvalidError):
            parse_service_payload([1, 2])

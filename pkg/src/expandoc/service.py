"""Composition root: wires settings, providers, indices, engine, and store.

Both the HTTP API and the CLI talk to this object, so behavior (and error
mapping) stays identical across surfaces. It owns the in-memory indices,
rehydrates them from disk on startup, and persists every mutation before
returning.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .config import Settings
from .document import PaperDocument, document_from_canonical
from .embedding import EmbeddingClient, HashingEmbedder, HttpEmbeddingClient
from .engine import ExpandOutcome, ExpansionEngine, ExpansionTree
from .errors import NotFoundError, ValidationFailedError
from .ingestion import (
    IngestionConfig,
    ParserServiceClient,
    derive_paper_id,
    document_from_parser_output,
    ingest_document,
)
from .index import VectorIndex
from .llm import Gateway, Provider
from .store import Store


def _sha1_hex(data: bytes) -> str:
    return hashlib.sha1(data).hexdigest()


class ExpandocService:
    def __init__(
        self,
        settings: Settings,
        provider: Provider,
        embedder: Optional[EmbeddingClient] = None,
        store: Optional[Store] = None,
        parser_client: Optional[ParserServiceClient] = None,
    ):
        self.settings = settings
        self.store = store or Store(settings.data_dir)
        if embedder is None:
            if settings.embedding_url:
                embedder = HttpEmbeddingClient(
                    settings.embedding_url, model_id=settings.embedding_model
                )
            else:
                embedder = HashingEmbedder(dim=settings.embedding_dim)
        self.embedder = embedder
        dim = getattr(embedder, "dim", -1)
        if dim <= 0:
            dim = settings.embedding_dim
        self.chunk_index = VectorIndex("chunk", dim)
        self.paragraph_index = VectorIndex("paragraph", dim)
        self.gateway = Gateway(provider, audit_hook=self.store.append_audit)
        self.engine = ExpansionEngine(
            settings=settings,
            gateway=self.gateway,
            embedder=self.embedder,
            chunk_index=self.chunk_index,
            paragraph_index=self.paragraph_index,
        )
        self.parser_client = parser_client or (
            ParserServiceClient(settings.parser_url) if settings.parser_url else None
        )
        self.ingestion_config = IngestionConfig(
            chunk_size=settings.chunk_size,
            chunk_overlap=settings.chunk_overlap,
            batch_size=settings.batch_size,
        )
        self._documents: dict[str, PaperDocument] = {}
        self._trees: dict[str, ExpansionTree] = {}
        self.store.load_all_indices(self.chunk_index, self.paragraph_index)

    # --- ingestion -----------------------------------------------------

    def ingest_canonical_file(self, path: str | Path) -> dict:
        payload = json.loads(Path(path).read_text("utf-8"))
        return self.ingest_canonical(payload)

    def ingest_canonical(self, payload: dict) -> dict:
        doc = document_from_canonical(payload)
        return self._ingest(doc)

    def ingest_source(self, source_uri: str) -> dict:
        """Fetch from the parser service, then run the shared pipeline."""
        if self.parser_client is None:
            raise ValidationFailedError("no parser service configured (set parser_url)")
        paper_id = derive_paper_id(source_uri)
        self.store.set_status(paper_id, "processing")
        try:
            parsed = self.parser_client.fetch(source_uri)
            doc = document_from_parser_output(parsed, paper_id, source_uri=source_uri)
            return self._ingest(doc)
        except Exception as exc:
            self.store.set_status(paper_id, "failed", error=str(exc))
            raise

    def ingest_pdf_bytes(self, data: bytes, source_uri: Optional[str] = None) -> dict:
        """Parse raw PDF bytes via the parser service, then ingest."""
        if self.parser_client is None:
            raise ValidationFailedError("no parser service configured (set parser_url)")
        if not data:
            raise ValidationFailedError("empty request body")
        uri = source_uri or ("bytes:" + _sha1_hex(data))
        paper_id = derive_paper_id(uri)
        self.store.set_status(paper_id, "processing")
        try:
            parsed = self.parser_client.fetch_bytes(data)
            doc = document_from_parser_output(parsed, paper_id, source_uri=source_uri)
            return self._ingest(doc)
        except Exception as exc:
            self.store.set_status(paper_id, "failed", error=str(exc))
            raise

    def _ingest(self, doc: PaperDocument) -> dict:
        self.store.set_status(doc.paper_id, "processing")
        try:
            result = ingest_document(
                doc,
                self.ingestion_config,
                self.embedder,
                self.chunk_index,
                self.paragraph_index,
            )
        except Exception as exc:
            self.store.set_status(doc.paper_id, "failed", error=str(exc))
            raise
        self.store.save_document(doc)
        self.store.save_index_rows(doc.paper_id, self.chunk_index)
        self.store.save_index_rows(doc.paper_id, self.paragraph_index)
        self._documents[doc.paper_id] = doc

        # Entity extraction is best-effort: a provider hiccup here must not
        # fail the ingest, because expansion on manual selections still works.
        try:
            entities = [e.to_payload() for e in self.engine.extract_entities(doc)]
        except Exception:
            entities = []
        self.store.save_entities(doc.paper_id, entities)
        self.store.set_status(doc.paper_id, "ready", stats=result.stats)
        return result.stats

    # --- paper access -----------------------------------------------------

    def get_document(self, paper_id: str) -> PaperDocument:
        doc = self._documents.get(paper_id)
        if doc is None:
            doc = self.store.load_document(paper_id)
            self._documents[paper_id] = doc
        return doc

    def get_status(self, paper_id: str) -> dict:
        return self.store.get_status(paper_id)

    def get_entities(self, paper_id: str) -> list[dict]:
        return self.store.load_entities(paper_id)

    def abstract_payload(self, paper_id: str) -> dict:
        doc = self.get_document(paper_id)
        return {
            "paper_id": doc.paper_id,
            "title": doc.title,
            "abstract": doc.abstract_text,
            "sentences": [s.text for s in doc.abstract_sentences],
            "entities": self.get_entities(paper_id),
        }

    def list_papers(self, query: str = "", page: int = 1, page_size: int = 20) -> dict:
        """Ready papers, filtered and paginated; ordering is stable by title.

        The query is a case-insensitive substring match on title or authors.
        """
        if page < 1 or page_size < 1:
            raise ValidationFailedError("page and page_size must be >= 1")
        needle = query.strip().lower()
        rows = []
        for paper_id in self.store.list_papers():
            try:
                if self.store.get_status(paper_id).get("status") != "ready":
                    continue
                doc = self.get_document(paper_id)
            except NotFoundError:
                continue
            authors = doc.metadata.authors or ""
            if needle and needle not in doc.title.lower() and needle not in authors.lower():
                continue
            rows.append(
                {
                    "paper_id": doc.paper_id,
                    "title": doc.title,
                    "authors": doc.metadata.authors,
                    "venue": doc.metadata.venue,
                    "year": doc.metadata.year,
                }
            )
        rows.sort(key=lambda r: (r["title"], r["paper_id"]))
        total = len(rows)
        pages = (total + page_size - 1) // page_size
        start = (page - 1) * page_size
        return {
            "items": rows[start : start + page_size],
            "page": page,
            "page_size": page_size,
            "total": total,
            "pages": pages,
        }

    def suggest(self, paper_id: str, selection: str, sentence: Optional[str] = None) -> str:
        doc = self.get_document(paper_id)
        return self.engine.suggest_question(doc, selection, sentence or selection)

    # --- trees ------------------------------------------------------------

    def create_tree(self, paper_id: str, tree_id: Optional[str] = None) -> ExpansionTree:
        doc = self.get_document(paper_id)
        tree = self.engine.new_tree(doc, tree_id=tree_id)
        if tree.tree_id in self._trees or self._tree_file_exists(tree.tree_id):
            raise ValidationFailedError(f"tree already exists: {tree.tree_id}")
        self._trees[tree.tree_id] = tree
        self.store.save_tree(tree.to_payload())
        return tree

    def _tree_file_exists(self, tree_id: str) -> bool:
        try:
            self.store.load_tree(tree_id)
            return True
        except NotFoundError:
            return False

    def get_tree(self, tree_id: str) -> ExpansionTree:
        tree = self._trees.get(tree_id)
        if tree is None:
            tree = ExpansionTree.from_payload(self.store.load_tree(tree_id))
            self._trees[tree_id] = tree
        return tree

    def get_or_create_tree(self, paper_id: str, tree_id: str) -> ExpansionTree:
        """Trees come into being on first use, rooted at the paper's abstract."""
        try:
            tree = self.get_tree(tree_id)
        except NotFoundError:
            return self.create_tree(paper_id, tree_id=tree_id)
        if tree.paper_id != paper_id:
            raise ValidationFailedError(
                f"tree {tree_id} belongs to paper {tree.paper_id}, not {paper_id}"
            )
        return tree

    def find_tree_for_node(self, node_id: str) -> ExpansionTree:
        for tree in self._trees.values():
            if tree.has_node(node_id):
                return tree
        for tree_id in self.store.list_trees():
            tree = self.get_tree(tree_id)
            if tree.has_node(node_id):
                return tree
        raise NotFoundError(f"node not found: {node_id}")

    def expand(
        self,
        paper_id: str,
        tree_id: str,
        parent_id: str,
        start: int,
        end: int,
        kind: str,
        custom_question: Optional[str] = None,
    ) -> ExpandOutcome:
        tree = self.get_or_create_tree(paper_id, tree_id)
        outcome = self.engine.expand(tree, parent_id, start, end, kind, custom_question)
        if outcome.node is not None:
            self.store.save_tree(tree.to_payload())
            self.store.append_expansion_event(
                {
                    "timestamp": datetime.now(timezone.utc).isoformat(),
                    "paper_id": tree.paper_id,
                    "tree_id": tree.tree_id,
                    "node_id": outcome.node.id,
                    "parent": parent_id,
                    "kind": kind,
                    "question": outcome.node.question,
                    "answer": outcome.node.answer,
                    "paragraph_index": (
                        outcome.node.attribution.paragraph_index
                        if outcome.node.attribution
                        else None
                    ),
                }
            )
        return outcome

    def set_collapsed(self, node_id: str, collapsed: bool) -> dict:
        tree = self.find_tree_for_node(node_id)
        node = tree.set_collapsed(node_id, collapsed)
        self.store.save_tree(tree.to_payload())
        return node.to_payload()

    def delete_node(self, node_id: str) -> list[str]:
        tree = self.find_tree_for_node(node_id)
        removed = tree.delete_subtree(node_id)
        self.store.save_tree(tree.to_payload())
        return removed

    def node_attribution(self, node_id: str) -> dict:
        """Attribution in wire shape, with a locator for the source view."""
        tree = self.find_tree_for_node(node_id)
        node = tree.node(node_id)
        if node.attribution is None:
            raise NotFoundError(f"node {node_id} has no attribution")
        attr = node.attribution
        doc = self.get_document(tree.paper_id)
        paragraph = doc.body_paragraphs[attr.paragraph_index]
        return {
            "paragraph_text": attr.text,
            "paragraph_ref": {
                "paper_id": tree.paper_id,
                "paragraph_index": attr.paragraph_index,
            },
            "score": attr.score,
            "source_locator": {
                "paper_id": tree.paper_id,
                "paragraph_index": attr.paragraph_index,
                "section": paragraph.section_label,
                "page": paragraph.page_anchor,
                "source_uri": doc.source_uri,
            },
        }

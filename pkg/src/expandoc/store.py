"""Filesystem persistence for papers, indices, trees, and logs.

Layout under the data directory:

    papers/<paper_id>/document.json     canonical document
    papers/<paper_id>/chunks.jsonl      chunk index rows (header + rows)
    papers/<paper_id>/paragraphs.jsonl  paragraph index rows (header + rows)
    papers/<paper_id>/entities.json     expandable entities for the abstract
    papers/<paper_id>/meta.json         status and ingest stats
    trees/<tree_id>.json                serialized expansion trees
    audit.jsonl                         append-only LLM call audit log
    expansions.jsonl                    append-only expansion event log

Document, index, and tree files are replaced atomically (write to a temp
file, then rename); the two logs are append-only.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterator, Optional

from .document import PaperDocument, document_from_canonical, document_to_canonical
from .errors import NotFoundError, ValidationFailedError
from .index import INDEX_FORMAT_VERSION, VectorIndex

PAPER_STATUSES = ("processing", "ready", "failed")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


class Store:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.papers_dir = self.root / "papers"
        self.trees_dir = self.root / "trees"
        self.papers_dir.mkdir(parents=True, exist_ok=True)
        self.trees_dir.mkdir(parents=True, exist_ok=True)

    # --- papers -----------------------------------------------------------

    def _paper_dir(self, paper_id: str, create: bool = False) -> Path:
        if not paper_id or "/" in paper_id or paper_id.startswith("."):
            raise ValidationFailedError(f"bad paper_id: {paper_id!r}")
        d = self.papers_dir / paper_id
        if create:
            d.mkdir(parents=True, exist_ok=True)
        return d

    def list_papers(self) -> list[str]:
        return sorted(p.name for p in self.papers_dir.iterdir() if p.is_dir())

    def has_paper(self, paper_id: str) -> bool:
        return (self._paper_dir(paper_id) / "meta.json").exists()

    def save_document(self, doc: PaperDocument) -> None:
        d = self._paper_dir(doc.paper_id, create=True)
        payload = document_to_canonical(doc)
        _atomic_write(d / "document.json", json.dumps(payload, sort_keys=True, ensure_ascii=False))

    def load_document(self, paper_id: str) -> PaperDocument:
        path = self._paper_dir(paper_id) / "document.json"
        if not path.exists():
            raise NotFoundError(f"paper not found: {paper_id}")
        return document_from_canonical(json.loads(path.read_text("utf-8")))

    def set_status(self, paper_id: str, status: str, error: Optional[str] = None,
                   stats: Optional[dict] = None) -> None:
        if status not in PAPER_STATUSES:
            raise ValidationFailedError(f"bad paper status: {status!r}")
        d = self._paper_dir(paper_id, create=True)
        meta = {"paper_id": paper_id, "status": status, "error": error, "stats": stats or {}}
        _atomic_write(d / "meta.json", json.dumps(meta, sort_keys=True))

    def get_status(self, paper_id: str) -> dict:
        path = self._paper_dir(paper_id) / "meta.json"
        if not path.exists():
            raise NotFoundError(f"paper not found: {paper_id}")
        return json.loads(path.read_text("utf-8"))

    def delete_paper(self, paper_id: str) -> None:
        d = self._paper_dir(paper_id)
        if not d.exists():
            raise NotFoundError(f"paper not found: {paper_id}")
        for child in sorted(d.iterdir()):
            child.unlink()
        d.rmdir()

    # --- index rows ---------------------------------------------------------

    def save_index_rows(self, paper_id: str, index: VectorIndex) -> None:
        """Persist one paper's entries from ``index`` as a headered JSONL file."""
        d = self._paper_dir(paper_id, create=True)
        filename = "chunks.jsonl" if index.granularity == "chunk" else "paragraphs.jsonl"
        header = {
            "version": INDEX_FORMAT_VERSION,
            "granularity": index.granularity,
            "dim": index.dim,
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines.extend(json.dumps(row, sort_keys=True) for row in index.to_rows(paper_id))
        _atomic_write(d / filename, "\n".join(lines) + "\n")

    def load_index_rows(self, paper_id: str, granularity: str, into: VectorIndex) -> int:
        """Load one paper's rows into ``into``; returns the row count."""
        filename = "chunks.jsonl" if granularity == "chunk" else "paragraphs.jsonl"
        path = self._paper_dir(paper_id) / filename
        if not path.exists():
            raise NotFoundError(f"no {granularity} rows for paper {paper_id}")
        with path.open("r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("version") != INDEX_FORMAT_VERSION:
                raise ValidationFailedError(
                    f"{path} has index format version {header.get('version')!r}, "
                    f"expected {INDEX_FORMAT_VERSION}"
                )
            if header.get("granularity") != into.granularity:
                raise ValidationFailedError(
                    f"{path} holds {header.get('granularity')!r} rows, "
                    f"index expects {into.granularity!r}"
                )
            rows = [json.loads(line) for line in fh if line.strip()]
        into.add_rows(rows)
        return len(rows)

    def load_all_indices(self, chunk_index: VectorIndex, paragraph_index: VectorIndex) -> int:
        """Rehydrate both indices for every stored paper; returns papers loaded."""
        loaded = 0
        for paper_id in self.list_papers():
            d = self._paper_dir(paper_id)
            if (d / "chunks.jsonl").exists():
                self.load_index_rows(paper_id, "chunk", chunk_index)
            if (d / "paragraphs.jsonl").exists():
                self.load_index_rows(paper_id, "paragraph", paragraph_index)
            loaded += 1
        return loaded

    # --- entities -----------------------------------------------------------

    def save_entities(self, paper_id: str, entities: list[dict]) -> None:
        d = self._paper_dir(paper_id, create=True)
        _atomic_write(
            d / "entities.json", json.dumps(entities, sort_keys=True, ensure_ascii=False)
        )

    def load_entities(self, paper_id: str) -> list[dict]:
        path = self._paper_dir(paper_id) / "entities.json"
        if not path.exists():
            raise NotFoundError(f"no entities stored for paper {paper_id}")
        return json.loads(path.read_text("utf-8"))

    # --- trees ----------------------------------------------------------------

    def save_tree(self, payload: dict) -> None:
        tree_id = payload.get("tree_id")
        if not tree_id:
            raise ValidationFailedError("tree payload missing tree_id")
        _atomic_write(
            self.trees_dir / f"{tree_id}.json",
            json.dumps(payload, sort_keys=True, ensure_ascii=False),
        )

    def load_tree(self, tree_id: str) -> dict:
        path = self.trees_dir / f"{tree_id}.json"
        if not path.exists():
            raise NotFoundError(f"tree not found: {tree_id}")
        return json.loads(path.read_text("utf-8"))

    def list_trees(self, paper_id: Optional[str] = None) -> list[str]:
        ids = []
        for path in sorted(self.trees_dir.glob("*.json")):
            if paper_id is not None:
                payload = json.loads(path.read_text("utf-8"))
                if payload.get("paper_id") != paper_id:
                    continue
            ids.append(path.stem)
        return ids

    def delete_tree(self, tree_id: str) -> None:
        path = self.trees_dir / f"{tree_id}.json"
        if not path.exists():
            raise NotFoundError(f"tree not found: {tree_id}")
        path.unlink()

    # --- logs -------------------------------------------------------------------

    def append_audit(self, record: dict) -> None:
        self._append_jsonl(self.root / "audit.jsonl", record)

    def iter_audit(self) -> Iterator[dict]:
        yield from self._iter_jsonl(self.root / "audit.jsonl")

    def append_expansion_event(self, record: dict) -> None:
        self._append_jsonl(self.root / "expansions.jsonl", record)

    def iter_expansion_events(self) -> Iterator[dict]:
        yield from self._iter_jsonl(self.root / "expansions.jsonl")

    @staticmethod
    def _append_jsonl(path: Path, record: dict) -> None:
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    @staticmethod
    def _iter_jsonl(path: Path) -> Iterator[dict]:
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield json.loads(line)

"""Filesystem store: layout, round-trips, status lifecycle, append logs."""

import json

import numpy as np
import pytest

from expandoc.document import EmbeddingVector, build_document
from expandoc.errors import NotFoundError, ValidationFailedError
from expandoc.index import IndexEntry, VectorIndex
from expandoc.store import PAPER_STATUSES, Store


@pytest.fixture()
def store(tmp_path):
    return Store(tmp_path / "data")


def _doc(paper_id="p1"):
    return build_document(
        paper_id, "T", ["Abs one."], [("Intro", ["Body one.", "Body two."], 1)]
    )


def _index_with(paper_id, n=3, granularity="chunk", dim=4):
    index = VectorIndex(granularity=granularity, dim=dim)
    rng = np.random.default_rng(0)
    index.upsert(
        [
            IndexEntry(
                paper_id=paper_id,
                ordinal=i,
                text=f"text {i}",
                vector=EmbeddingVector(rng.normal(size=dim)),
                meta={"section": "Intro"},
            )
            for i in range(n)
        ]
    )
    return index


class TestPapers:
    def test_document_round_trip(self, store):
        doc = _doc()
        store.save_document(doc)
        assert store.load_document("p1") == doc

    def test_missing_document(self, store):
        with pytest.raises(NotFoundError):
            store.load_document("absent")

    def test_status_lifecycle(self, store):
        store.set_status("p1", "processing")
        assert store.get_status("p1")["status"] == "processing"
        store.set_status("p1", "ready", stats={"chunks": 3})
        meta = store.get_status("p1")
        assert meta == {"paper_id": "p1", "status": "ready", "error": None, "stats": {"chunks": 3}}
        store.set_status("p1", "failed", error="boom")
        assert store.get_status("p1")["error"] == "boom"

    def test_bad_status_rejected(self, store):
        assert PAPER_STATUSES == ("processing", "ready", "failed")
        with pytest.raises(ValidationFailedError):
            store.set_status("p1", "done")

    def test_has_paper_and_listing(self, store):
        assert not store.has_paper("p1")
        store.set_status("p1", "processing")
        store.set_status("p0", "processing")
        assert store.has_paper("p1")
        assert store.list_papers() == ["p0", "p1"]

    def test_delete_paper(self, store):
        store.save_document(_doc())
        store.set_status("p1", "ready")
        store.delete_paper("p1")
        assert store.list_papers() == []
        with pytest.raises(NotFoundError):
            store.delete_paper("p1")

    @pytest.mark.parametrize("bad", ["", "a/b", ".hidden", "../escape"])
    def test_paper_id_path_safety(self, store, bad):
        with pytest.raises(ValidationFailedError):
            store.set_status(bad, "processing")

    def test_atomic_write_leaves_no_temp_files(self, store, tmp_path):
        store.save_document(_doc())
        leftovers = [p for p in (tmp_path / "data").rglob("*") if p.name.endswith(".tmp")]
        assert leftovers == []


class TestIndexRows:
    def test_round_trip(self, store):
        index = _index_with("p1")
        store.save_index_rows("p1", index)
        fresh = VectorIndex(granularity="chunk", dim=4)
        count = store.load_index_rows("p1", "chunk", fresh)
        assert count == 3
        assert [e.ordinal for e in fresh.entries_for("p1")] == [0, 1, 2]
        assert fresh.get("p1", 1).meta == {"section": "Intro"}

    def test_missing_rows(self, store):
        with pytest.raises(NotFoundError):
            store.load_index_rows("p1", "chunk", VectorIndex(granularity="chunk", dim=4))

    def test_granularity_mismatch_rejected(self, store):
        store.save_index_rows("p1", _index_with("p1", granularity="chunk"))
        wrong = VectorIndex(granularity="paragraph", dim=4)
        # reading chunk rows into a paragraph index must fail
        with pytest.raises(ValidationFailedError):
            store.load_index_rows("p1", "chunk", wrong)

    def test_version_mismatch_rejected(self, store, tmp_path):
        store.save_index_rows("p1", _index_with("p1"))
        path = tmp_path / "data" / "papers" / "p1" / "chunks.jsonl"
        lines = path.read_text("utf-8").splitlines()
        header = json.loads(lines[0])
        header["version"] = 99
        path.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n", "utf-8")
        with pytest.raises(ValidationFailedError, match="version"):
            store.load_index_rows("p1", "chunk", VectorIndex(granularity="chunk", dim=4))

    def test_load_all_indices(self, store):
        for paper_id in ("a", "b"):
            store.save_index_rows(paper_id, _index_with(paper_id, granularity="chunk"))
            store.save_index_rows(paper_id, _index_with(paper_id, n=2, granularity="paragraph"))
        chunks = VectorIndex(granularity="chunk", dim=4)
        paragraphs = VectorIndex(granularity="paragraph", dim=4)
        assert store.load_all_indices(chunks, paragraphs) == 2
        assert chunks.count("a") == 3
        assert paragraphs.count("b") == 2


class TestEntities:
    def test_round_trip(self, store):
        entities = [{"anchor": "x", "start": 0, "end": 1, "verified": True}]
        store.save_entities("p1", entities)
        assert store.load_entities("p1") == entities

    def test_missing_entities_is_not_found(self, store):
        # ingestion always writes entities.json, so absence means "no such paper"
        with pytest.raises(NotFoundError):
            store.load_entities("p1")


class TestTrees:
    def _payload(self, tree_id="t1", paper_id="p1"):
        return {
            "tree_id": tree_id,
            "paper_id": paper_id,
            "next_ordinal": 1,
            "nodes": [{"id": "root", "parent": None}],
        }

    def test_round_trip(self, store):
        store.save_tree(self._payload())
        assert store.load_tree("t1") == self._payload()

    def test_missing_tree(self, store):
        with pytest.raises(NotFoundError):
            store.load_tree("absent")

    def test_list_trees_filtered_by_paper(self, store):
        store.save_tree(self._payload("t1", "p1"))
        store.save_tree(self._payload("t2", "p2"))
        assert store.list_trees() == ["t1", "t2"]
        assert store.list_trees("p2") == ["t2"]

    def test_delete_tree(self, store):
        store.save_tree(self._payload())
        store.delete_tree("t1")
        assert store.list_trees() == []
        with pytest.raises(NotFoundError):
            store.delete_tree("t1")


class TestAppendLogs:
    def test_audit_round_trip(self, store):
        store.append_audit({"template_name": "question_answering", "model_id": "m"})
        store.append_audit({"template_name": "entity_extraction", "model_id": "m"})
        records = list(store.iter_audit())
        assert [r["template_name"] for r in records] == [
            "question_answering",
            "entity_extraction",
        ]

    def test_expansion_events_round_trip(self, store):
        store.append_expansion_event({"node_id": "n1", "kind": "define"})
        records = list(store.iter_expansion_events())
        assert records == [{"node_id": "n1", "kind": "define"}]

    def test_empty_logs_iterate_empty(self, store):
        assert list(store.iter_audit()) == []
        assert list(store.iter_expansion_events()) == []

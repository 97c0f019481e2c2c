"""Evaluation helpers: retrieval re-ranking, sampling, and annotation reports."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from expandoc.document import EmbeddingVector
from expandoc.engine import QUESTION_KINDS
from expandoc.errors import ValidationFailedError
from expandoc.index import IndexEntry, VectorIndex
from expandoc.report import (
    VERDICTS,
    brute_force_ranking,
    format_annotation_summary,
    format_retrieval_report,
    load_verdicts_file,
    retrieval_eval,
    stratified_sample,
    summarize_verdicts,
    write_annotation_report,
)


def _random_index(n: int, dim: int = 16, seed: int = 0) -> VectorIndex:
    rng = np.random.default_rng(seed)
    index = VectorIndex(dim=dim, granularity="chunk")
    index.upsert(
        [
            IndexEntry(
                paper_id="p",
                ordinal=i,
                vector=EmbeddingVector(rng.standard_normal(dim)),
                text=f"entry {i}",
            )
            for i in range(n)
        ]
    )
    return index


class TestBruteForceRanking:
    def test_orders_every_ordinal(self):
        index = _random_index(20)
        query = EmbeddingVector(np.random.default_rng(7).standard_normal(16))
        order = brute_force_ranking(index, query, "p")
        assert sorted(order) == list(range(20))

    def test_agrees_with_top_k_prefix(self):
        index = _random_index(30, seed=2)
        rng = np.random.default_rng(5)
        for _ in range(10):
            query = EmbeddingVector(rng.standard_normal(16))
            want = brute_force_ranking(index, query, "p")[:12]
            got = [r.ordinal for r in index.top_k(query, "p", k=12)]
            assert got == want

    def test_tie_break_on_ordinal(self):
        index = VectorIndex(dim=4, granularity="chunk")
        same = EmbeddingVector([1.0, 0.0, 0.0, 0.0])
        index.upsert(
            [IndexEntry(paper_id="p", ordinal=i, vector=same, text="t") for i in (9, 4, 6)]
        )
        order = brute_force_ranking(index, same, "p")
        assert order == [4, 6, 9]


class TestRetrievalEval:
    def test_real_index_passes(self, ingested):
        service, paper_id = ingested
        result = retrieval_eval(service.chunk_index, paper_id, trials=20, seed=11)
        assert result["passed"] is True
        assert result["max_rank_divergence"] == 0
        assert result["trials"] == 20
        assert result["entries"] == service.chunk_index.count(paper_id)

    def test_synthetic_index_passes(self):
        index = _random_index(200, seed=4)
        result = retrieval_eval(index, "p", trials=50, k=12, seed=1)
        assert result["passed"] is True
        assert result["k"] == 12

    def test_zero_trials_rejected(self):
        index = _random_index(5)
        with pytest.raises(ValidationFailedError):
            retrieval_eval(index, "p", trials=0)

    def test_report_lines(self):
        result = {
            "paper_id": "p",
            "entries": 5,
            "trials": 3,
            "k": 12,
            "max_rank_divergence": 0,
            "passed": True,
        }
        text = format_retrieval_report(result)
        assert "max_rank_divergence: 0" in text
        assert text.splitlines()[-1] == "result: pass"

    def test_report_failure_line(self):
        result = {
            "paper_id": "p",
            "entries": 5,
            "trials": 3,
            "k": 12,
            "max_rank_divergence": 2,
            "passed": False,
        }
        assert format_retrieval_report(result).splitlines()[-1] == "result: fail"


def _events(per_kind: int, kinds=QUESTION_KINDS) -> list[dict]:
    events = []
    for kind in kinds:
        for i in range(per_kind):
            events.append(
                {
                    "node_id": f"{kind}-{i}",
                    "paper_id": "p",
                    "tree_id": "t",
                    "kind": kind,
                    "question": f"q {kind} {i}",
                    "answer": f"a {kind} {i}",
                }
            )
    return events


class TestStratifiedSample:
    def test_exact_counts_per_kind(self):
        sample = stratified_sample(_events(10), per_kind=3, seed=0)
        assert len(sample) == 3 * len(QUESTION_KINDS)
        for kind in QUESTION_KINDS:
            assert sum(1 for e in sample if e["kind"] == kind) == 3

    def test_deterministic_for_seed(self):
        events = _events(25)
        a = stratified_sample(events, per_kind=5, seed=42)
        b = stratified_sample(events, per_kind=5, seed=42)
        assert a == b

    def test_seed_changes_selection(self):
        events = _events(50)
        a = stratified_sample(events, per_kind=5, seed=1)
        b = stratified_sample(events, per_kind=5, seed=2)
        assert a != b

    def test_insufficient_events_rejected(self):
        events = _events(2)
        with pytest.raises(ValidationFailedError, match="insufficient"):
            stratified_sample(events, per_kind=3)

    def test_zero_per_kind_rejected(self):
        with pytest.raises(ValidationFailedError):
            stratified_sample(_events(5), per_kind=0)

    def test_ignores_unknown_kinds(self):
        events = _events(4) + [{"kind": "mystery", "node_id": "x"}]
        sample = stratified_sample(events, per_kind=4, seed=0)
        assert all(e["kind"] in QUESTION_KINDS for e in sample)


class TestSummarizeVerdicts:
    def test_accuracy_arithmetic(self):
        verdicts = ["accurate"] * 105 + ["inaccurate_detail"] * 9 + ["other"] * 6
        summary = summarize_verdicts(verdicts)
        assert summary["total"] == 120
        assert summary["counts"]["accurate"] == 105
        assert summary["accuracy_pct"] == pytest.approx(87.5)

    def test_formatted_line(self):
        verdicts = ["accurate"] * 105 + ["missing_content"] * 15
        text = format_annotation_summary(summarize_verdicts(verdicts))
        assert "accuracy: 87.5% (105/120)" in text
        assert "sampled: 120" in text

    def test_all_verdicts_counted(self):
        summary = summarize_verdicts(list(VERDICTS))
        assert summary["counts"] == {v: 1 for v in VERDICTS}
        assert summary["accuracy_pct"] == pytest.approx(25.0)

    def test_unknown_verdict_rejected(self):
        with pytest.raises(ValidationFailedError, match="unknown verdict"):
            summarize_verdicts(["accurate", "great"])

    def test_empty_rejected(self):
        with pytest.raises(ValidationFailedError):
            summarize_verdicts([])


class TestLoadVerdictsFile:
    def test_bare_list(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps(["accurate", "other"]), "utf-8")
        assert load_verdicts_file(path) == ["accurate", "other"]

    def test_wrapped_object(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"verdicts": ["accurate"]}), "utf-8")
        assert load_verdicts_file(path) == ["accurate"]

    def test_non_list_rejected(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"verdicts": "accurate"}), "utf-8")
        with pytest.raises(ValidationFailedError):
            load_verdicts_file(path)

    def test_non_string_entries_rejected(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps([1, 2]), "utf-8")
        with pytest.raises(ValidationFailedError):
            load_verdicts_file(path)


class TestWriteAnnotationReport:
    def test_writes_csv_and_figures(self, tmp_path):
        sample = _events(2)
        verdicts = ["accurate"] * len(sample)
        written = write_annotation_report(tmp_path / "out", sample, verdicts)
        names = sorted(p.name for p in written)
        assert names == ["accuracy_by_kind.png", "annotations.csv", "verdict_breakdown.png"]
        for path in written:
            assert path.exists() and path.stat().st_size > 0

    def test_csv_columns_and_rows(self, tmp_path):
        sample = _events(1)
        verdicts = ["accurate", "other", "missing_content", "inaccurate_detail"]
        notes = [f"note {i}" for i in range(4)]
        write_annotation_report(tmp_path, sample, verdicts, notes=notes)
        with (tmp_path / "annotations.csv").open(encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "node_id",
            "paper_id",
            "tree_id",
            "kind",
            "question",
            "answer",
            "verdict",
            "note",
        ]
        assert len(rows) == 1 + len(sample)
        assert rows[1][0] == sample[0]["node_id"]
        assert [r[6] for r in rows[1:]] == verdicts
        assert [r[7] for r in rows[1:]] == notes

    def test_length_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValidationFailedError, match="verdicts"):
            write_annotation_report(tmp_path, _events(1), ["accurate"])

    def test_pngs_have_magic_bytes(self, tmp_path):
        sample = _events(1)
        write_annotation_report(tmp_path, sample, ["accurate"] * len(sample))
        for name in ("accuracy_by_kind.png", "verdict_breakdown.png"):
            head = (tmp_path / name).read_bytes()[:8]
            assert head == b"\x89PNG\r\n\x1a\n"

    def test_creates_nested_report_dir(self, tmp_path):
        target = tmp_path / "a" / "b"
        write_annotation_report(target, _events(1), ["accurate"] * 4)
        assert (target / "annotations.csv").exists()

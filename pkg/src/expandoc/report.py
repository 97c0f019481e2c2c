"""Desk-scale evaluation: retrieval oracle checks and annotation workflow.

The retrieval check re-ranks every query with an independent brute-force
scorer and reports the worst rank divergence (which must be zero). The
annotation workflow reproduces the accuracy-audit methodology: a stratified
sample over question kinds, human verdicts, and an accuracy summary, with an
optional report directory holding the CSV and rendered figures.
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .document import EmbeddingVector
from .engine import QUESTION_KINDS
from .errors import ValidationFailedError
from .index import VectorIndex, cosine

VERDICTS = ("accurate", "inaccurate_detail", "missing_content", "other")


# --- retrieval ------------------------------------------------------------


def brute_force_ranking(index: VectorIndex, query: EmbeddingVector, paper_id: str) -> list[int]:
    """Ordinals ranked by (-cosine, ordinal), scored entry by entry."""
    scored = [
        (-cosine(query, entry.vector), entry.ordinal) for entry in index.entries_for(paper_id)
    ]
    scored.sort()
    return [ordinal for _neg, ordinal in scored]


def retrieval_eval(
    index: VectorIndex, paper_id: str, trials: int, k: int = 12, seed: int = 0
) -> dict:
    """Compare top_k against brute force over random gaussian queries."""
    if trials < 1:
        raise ValidationFailedError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    entries = index.count(paper_id)
    max_divergence = 0
    for _ in range(trials):
        query = EmbeddingVector(rng.standard_normal(index.dim))
        got = [r.ordinal for r in index.top_k(query, paper_id, k=k)]
        want = brute_force_ranking(index, query, paper_id)[:k]
        divergence = sum(1 for g, w in zip(got, want) if g != w) + abs(len(got) - len(want))
        max_divergence = max(max_divergence, divergence)
    return {
        "paper_id": paper_id,
        "trials": trials,
        "k": k,
        "entries": entries,
        "max_rank_divergence": max_divergence,
        "passed": max_divergence == 0,
    }


def format_retrieval_report(result: dict) -> str:
    return "\n".join(
        [
            f"paper_id: {result['paper_id']}",
            f"entries: {result['entries']}",
            f"trials: {result['trials']}",
            f"k: {result['k']}",
            f"max_rank_divergence: {result['max_rank_divergence']}",
            f"result: {'pass' if result['passed'] else 'fail'}",
        ]
    )


# --- annotation -------------------------------------------------------------


def stratified_sample(
    events: Sequence[dict],
    per_kind: int,
    kinds: Sequence[str] = QUESTION_KINDS,
    seed: int = 0,
) -> list[dict]:
    """Sample ``per_kind`` expansions per question kind, deterministically."""
    if per_kind < 1:
        raise ValidationFailedError("per-question sample size must be >= 1")
    rng = random.Random(seed)
    sample: list[dict] = []
    for kind in kinds:
        group = [e for e in events if e.get("kind") == kind]
        if len(group) < per_kind:
            raise ValidationFailedError(
                f"insufficient log entries for kind {kind!r}: have {len(group)}, "
                f"need {per_kind}"
            )
        sample.extend(rng.sample(group, per_kind))
    return sample


def summarize_verdicts(verdicts: Sequence[str]) -> dict:
    if not verdicts:
        raise ValidationFailedError("no verdicts to summarize")
    counts = {v: 0 for v in VERDICTS}
    for verdict in verdicts:
        if verdict not in counts:
            raise ValidationFailedError(f"unknown verdict: {verdict!r}")
        counts[verdict] += 1
    total = len(verdicts)
    rate = 100.0 * counts["accurate"] / total
    return {"counts": counts, "total": total, "accuracy_pct": rate}


def format_annotation_summary(summary: dict) -> str:
    counts = summary["counts"]
    lines = [f"sampled: {summary['total']}"]
    lines.extend(f"{verdict}: {counts[verdict]}" for verdict in VERDICTS)
    lines.append(
        f"accuracy: {summary['accuracy_pct']:.1f}% ({counts['accurate']}/{summary['total']})"
    )
    return "\n".join(lines)


def load_verdicts_file(path: str | Path) -> list[str]:
    payload = json.loads(Path(path).read_text("utf-8"))
    verdicts = payload.get("verdicts") if isinstance(payload, dict) else payload
    if not isinstance(verdicts, list) or not all(isinstance(v, str) for v in verdicts):
        raise ValidationFailedError("verdicts file must hold a JSON list of verdict strings")
    return verdicts


def write_annotation_report(
    report_dir: str | Path,
    sample: Sequence[dict],
    verdicts: Sequence[str],
    notes: Optional[Sequence[str]] = None,
) -> list[Path]:
    """Write annotations.csv plus rendered figures; returns written paths."""
    if len(sample) != len(verdicts):
        raise ValidationFailedError(
            f"{len(sample)} sampled expansions but {len(verdicts)} verdicts"
        )
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    notes = list(notes) if notes is not None else [""] * len(sample)

    csv_path = report_dir / "annotations.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["node_id", "paper_id", "tree_id", "kind", "question", "answer", "verdict", "note"]
        )
        for event, verdict, note in zip(sample, verdicts, notes):
            writer.writerow(
                [
                    event.get("node_id", ""),
                    event.get("paper_id", ""),
                    event.get("tree_id", ""),
                    event.get("kind", ""),
                    event.get("question", ""),
                    event.get("answer", ""),
                    verdict,
                    note,
                ]
            )

    written = [csv_path]

    by_kind: dict[str, list[str]] = {}
    for event, verdict in zip(sample, verdicts):
        by_kind.setdefault(event.get("kind", "?"), []).append(verdict)
    kinds = sorted(by_kind)
    accuracy = [
        100.0 * sum(1 for v in by_kind[k] if v == "accurate") / len(by_kind[k]) for k in kinds
    ]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(kinds, accuracy, color="#4878a8")
    ax.set_ylabel("accurate (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Annotation accuracy by question kind")
    fig.tight_layout()
    kind_png = report_dir / "accuracy_by_kind.png"
    fig.savefig(kind_png)
    plt.close(fig)
    written.append(kind_png)

    summary = summarize_verdicts(verdicts)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(VERDICTS, [summary["counts"][v] for v in VERDICTS], color="#a85448")
    ax.set_ylabel("count")
    ax.set_title("Verdict breakdown")
    fig.tight_layout()
    breakdown_png = report_dir / "verdict_breakdown.png"
    fig.savefig(breakdown_png)
    plt.close(fig)
    written.append(breakdown_png)

    return written

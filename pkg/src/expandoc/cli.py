"""Command-line interface: ingest, expand, serve, and desk-scale evaluation.

Every command runs offline with ``--mock`` (the rule-based provider) or
``--mock <fixture.json>`` (canned responses); mock-mode stdout is byte-stable
for a given data directory state. Exit codes map 1:1 onto the API error
codes; code 1 is reserved for a failing evaluation.

    2  validation_failed
    3  not_found
    4  invalid_anchor
    5  no_answer
    6  provider_unavailable
    7  depth_exceeded
"""

from __future__ import annotations

import dataclasses
import json
import sys
from functools import wraps
from pathlib import Path
from typing import Optional

import click

from .config import Settings, load_settings
from .engine import QUESTION_KINDS, ROOT_NODE_ID
from .errors import EXIT_CODES, ExpandocError, InvalidAnchorError
from .llm import CannedProvider, HttpChatProvider, MockProvider
from .report import (
    VERDICTS,
    format_annotation_summary,
    format_retrieval_report,
    load_verdicts_file,
    retrieval_eval,
    stratified_sample,
    summarize_verdicts,
    write_annotation_report,
)
from .service import ExpandocService

MOCK_BUILTIN = "__builtin__"


def _build_service(settings: Settings, mock: Optional[str]) -> ExpandocService:
    if mock == MOCK_BUILTIN:
        provider = MockProvider()
    elif mock:
        provider = CannedProvider.from_file(mock)
    elif settings.llm_url:
        provider = HttpChatProvider(settings.llm_url, api_key=settings.llm_api_key)
    else:
        # offline by default: no configured endpoint means the mock provider
        provider = MockProvider()
    return ExpandocService(settings, provider)


def _coded_errors(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ExpandocError as exc:
            click.echo(f"error ({exc.code}): {exc.message}", err=True)
            sys.exit(EXIT_CODES[exc.code])

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Settings file (YAML or JSON).")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Override the data directory.")
@click.pass_context
def cli(ctx, config_path, data_dir):
    """Expandable-abstracts toolkit."""
    try:
        settings = load_settings(config_path)
        if data_dir is not None:
            settings = dataclasses.replace(settings, data_dir=data_dir)
    except ExpandocError as exc:
        click.echo(f"error ({exc.code}): {exc.message}", err=True)
        sys.exit(EXIT_CODES[exc.code])
    ctx.obj = settings


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", "mock", is_flag=False, flag_value=MOCK_BUILTIN, default=None,
              help="Use the mock provider, or a canned-response fixture file.")
@click.pass_obj
@_coded_errors
def ingest(settings: Settings, path: str, mock: Optional[str]):
    """Ingest a canonical-JSON paper and index it."""
    service = _build_service(settings, mock)
    try:
        stats = service.ingest_canonical_file(path)
    except json.JSONDecodeError as exc:
        click.echo(f"error (validation_failed): {path} is not valid JSON: {exc}", err=True)
        sys.exit(EXIT_CODES["validation_failed"])
    click.echo(f"paper_id: {stats['paper_id']}")
    click.echo(f"sentences: {stats['sentences']}")
    click.echo(f"chunks: {stats['chunks']}")
    click.echo(f"paragraphs: {stats['paragraphs']}")


@cli.command()
@click.option("--paper", "paper_id", required=True)
@click.option("--anchor", "anchor_text", required=True,
              help="Verbatim span in the parent node's text.")
@click.option("--question", "question", required=True,
              help="A kind (define/expand/why) or literal question text.")
@click.option("--tree", "tree_id", default="cli", show_default=True)
@click.option("--parent", "parent_id", default=ROOT_NODE_ID, show_default=True)
@click.option("--mock", "mock", is_flag=False, flag_value=MOCK_BUILTIN, default=None,
              help="Use the mock provider, or a canned-response fixture file.")
@click.pass_obj
@_coded_errors
def expand(settings, paper_id, anchor_text, question, tree_id, parent_id, mock):
    """Create one expansion and print the new node as JSON."""
    service = _build_service(settings, mock)
    tree = service.get_or_create_tree(paper_id, tree_id)
    parent = tree.node(parent_id)
    start = parent.display_text.find(anchor_text)
    if start == -1:
        raise InvalidAnchorError(
            f"anchor text not found in node {parent_id!r}: {anchor_text!r}"
        )
    end = start + len(anchor_text)

    if question in QUESTION_KINDS and question != "custom":
        kind, custom_question = question, None
    else:
        kind, custom_question = "custom", question

    outcome = service.expand(
        paper_id=paper_id,
        tree_id=tree_id,
        parent_id=parent_id,
        start=start,
        end=end,
        kind=kind,
        custom_question=custom_question,
    )
    if outcome.no_answer:
        click.echo(
            json.dumps(
                {
                    "code": "no_answer",
                    "message": "the paper does not answer this question",
                    "retryable": False,
                },
                sort_keys=True,
            )
        )
        sys.exit(EXIT_CODES["no_answer"])
    payload = outcome.node.to_payload()
    payload["tree_id"] = tree_id
    click.echo(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2))


@cli.group()
def eval():
    """Evaluation commands."""


@eval.command()
@click.option("--paper", "paper_id", required=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--k", type=int, default=12, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
@_coded_errors
def retrieval(settings, paper_id, trials, k, seed):
    """Check top-k retrieval against a brute-force oracle."""
    service = _build_service(settings, MOCK_BUILTIN)
    result = retrieval_eval(service.chunk_index, paper_id, trials=trials, k=k, seed=seed)
    click.echo(format_retrieval_report(result))
    if not result["passed"]:
        sys.exit(1)


@eval.command()
@click.option("--sample", "sample_size", type=int, default=None,
              help="Expected total sample size (defaults to 4x per-question).")
@click.option("--per-question", "per_kind", type=int, default=30, show_default=True)
@click.option("--log", "log_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Expansion event log (defaults to the data directory's log).")
@click.option("--verdicts", "verdicts_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Verdict list file; omit for interactive entry.")
@click.option("--report-dir", type=click.Path(file_okay=False), default=None,
              help="Write annotations.csv and figures here.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
@_coded_errors
def annotate(settings, sample_size, per_kind, log_path, verdicts_path, report_dir, seed):
    """Stratified accuracy annotation over the expansion log."""
    if log_path is None:
        log_path = Path(settings.data_dir) / "expansions.jsonl"
        if not log_path.exists():
            click.echo("error (validation_failed): no expansion log found", err=True)
            sys.exit(EXIT_CODES["validation_failed"])
    events = [
        json.loads(line)
        for line in Path(log_path).read_text("utf-8").splitlines()
        if line.strip()
    ]
    expected_total = per_kind * len(QUESTION_KINDS)
    if sample_size is not None and sample_size != expected_total:
        click.echo(
            f"error (validation_failed): --sample {sample_size} conflicts with "
            f"--per-question {per_kind} over {len(QUESTION_KINDS)} kinds "
            f"(= {expected_total})",
            err=True,
        )
        sys.exit(EXIT_CODES["validation_failed"])

    sample = stratified_sample(events, per_kind, seed=seed)

    if verdicts_path is not None:
        verdicts = load_verdicts_file(verdicts_path)
        if len(verdicts) != len(sample):
            click.echo(
                f"error (validation_failed): {len(verdicts)} verdicts for "
                f"{len(sample)} sampled expansions",
                err=True,
            )
            sys.exit(EXIT_CODES["validation_failed"])
    else:
        verdicts = []
        for i, event in enumerate(sample, start=1):
            click.echo(f"\n[{i}/{len(sample)}] kind={event.get('kind')}")
            click.echo(f"Q: {event.get('question')}")
            click.echo(f"A: {event.get('answer')}")
            verdicts.append(
                click.prompt("verdict", type=click.Choice(VERDICTS), show_choices=True)
            )

    summary = summarize_verdicts(verdicts)
    click.echo(format_annotation_summary(summary))
    if report_dir is not None:
        written = write_annotation_report(report_dir, sample, verdicts)
        for path in written:
            click.echo(f"wrote: {path}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--mock", "mock", is_flag=False, flag_value=MOCK_BUILTIN, default=None,
              help="Serve against the mock provider (offline).")
@click.pass_obj
@_coded_errors
def serve(settings, host, port, mock):
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    service = _build_service(settings, mock)
    uvicorn.run(create_app(service), host=host, port=port, log_level="info")


def main():
    cli(prog_name="expandoc")


if __name__ == "__main__":
    main()

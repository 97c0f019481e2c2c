"""Shared fixtures: the canned fixture paper and mock-backed service builders."""

import json
from pathlib import Path

import pytest

from expandoc.config import Settings
from expandoc.document import document_from_canonical
from expandoc.llm import MockProvider
from expandoc.service import ExpandocService

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

FIXTURE_PAPER = FIXTURES / "spindle_paper.json"


@pytest.fixture(scope="session")
def fixture_paper_path() -> Path:
    return FIXTURE_PAPER


@pytest.fixture()
def fixture_doc():
    payload = json.loads(FIXTURE_PAPER.read_text("utf-8"))
    return document_from_canonical(payload)


@pytest.fixture()
def make_service(tmp_path):
    """Factory for a fully offline service over a throwaway data dir."""

    def _make(provider=None, settings=None, subdir="data", **settings_kw):
        if settings is None:
            settings = Settings(data_dir=str(tmp_path / subdir), **settings_kw)
        return ExpandocService(settings, provider or MockProvider(seed=3))

    return _make


@pytest.fixture()
def ingested(make_service):
    """Service with the fixture paper ingested and ready."""
    service = make_service()
    stats = service.ingest_canonical_file(str(FIXTURE_PAPER))
    return service, stats["paper_id"]


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance check, on every run that touched them."""
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        verdict = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{name}: {verdict}")

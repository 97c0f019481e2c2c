"""Prompt templates, the completion gateway, and offline providers.

Templates live as text files next to this module: the first line is the
system message, the remainder (after one blank line) is the user message.
Rendering is single-pass: placeholder values are never rescanned, and brace
sequences that are not declared placeholders pass through untouched.

Two providers ship with the package. MockProvider answers by rule from the
rendered prompt itself, so the whole pipeline runs deterministically offline.
CannedProvider replays a fixed list of responses for fixture-driven tests.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, Union

from .errors import (
    ProviderError,
    ProviderRefusalError,
    UnboundPlaceholderError,
    ValidationFailedError,
)
from .segmentation import segment_sentences

TEMPLATE_NAMES = ("entity_extraction", "question_generation", "question_answering")

# The answer-length instruction bound to {Response Length} in the QA prompt.
DEFAULT_RESPONSE_LENGTH = "concise, containing no more than three sentences"

MAX_ANSWER_SENTENCES = 3

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z][A-Za-z ]*)\}")

Bindings = dict[str, Union[str, Sequence[str]]]


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_template: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER_RE.findall(self.user_template))


@dataclass(frozen=True)
class RenderedPrompt:
    template_name: str
    system: str
    user: str
    bindings_digest: str


def load_template(name: str) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise ValidationFailedError(f"unknown template: {name!r}")
    text = resources.files(__package__).joinpath("prompts", f"{name}.txt").read_text("utf-8")
    first_line, _, rest = text.partition("\n")
    return PromptTemplate(name=name, system_text=first_line.strip(), user_template=rest.strip("\n"))


def _normalize_bindings(bindings: Bindings) -> dict[str, str]:
    out: dict[str, str] = {}
    for key, value in bindings.items():
        if isinstance(value, str):
            out[key] = value
        else:
            out[key] = "\n\n".join(value)
    return out


def bindings_digest(bindings: Bindings) -> str:
    canon = json.dumps(_normalize_bindings(bindings), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def render_prompt(template: PromptTemplate, bindings: Bindings) -> RenderedPrompt:
    """Substitute placeholders in one pass; missing bindings fail by name."""
    values = _normalize_bindings(bindings)

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise UnboundPlaceholderError(name)
        return values[name]

    user = _PLACEHOLDER_RE.sub(_sub, template.user_template)
    return RenderedPrompt(
        template_name=template.name,
        system=template.system_text,
        user=user,
        bindings_digest=bindings_digest(bindings),
    )


# --- few-shot example blocks -------------------------------------------


def _load_json_resource(filename: str):
    return json.loads(resources.files(__package__).joinpath("prompts", filename).read_text("utf-8"))


def load_extraction_examples() -> list[dict]:
    return _load_json_resource("extraction_examples.json")


def load_qa_examples() -> list[dict]:
    return _load_json_resource("qa_examples.json")


def format_extraction_example(example: dict) -> str:
    lines = [f"Title: {example['title']}", f"Abstract: {example['abstract']}", "Questions:"]
    for i, qa in enumerate(example["questions"], start=1):
        lines.append(f"{i}. {qa['anchor']} | {qa['question']}")
    return "\n".join(lines)


def format_qa_example(example: dict) -> str:
    return (
        f"Context: {example['context']}\n"
        f"Question: {example['question']}\n"
        f"Answer: {example['answer']}"
    )


# --- completion gateway --------------------------------------------------


@dataclass(frozen=True)
class GenerationParams:
    """Per-call generation settings; the model role travels here too."""

    model_id: str
    temperature: float = 0.0
    max_output_tokens: int = 750
    timeout_s: float = 60.0
    retries: int = 3  # total attempts for retryable transport failures

    def __post_init__(self):
        if self.retries < 1:
            raise ValidationFailedError("retries must be >= 1")
        if self.max_output_tokens < 1:
            raise ValidationFailedError("max_output_tokens must be >= 1")


@dataclass(frozen=True)
class LlmResult:
    raw_text: str
    model_id: str
    latency_s: float
    token_usage: dict = field(default_factory=dict)


class Provider(Protocol):
    def complete(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        ...


AuditHook = Callable[[dict], None]


class Gateway:
    """Routes completions to a provider with retry, timing, and audit.

    Retryable transport failures (unreachable, timeout) are retried with
    exponential backoff up to ``params.retries`` total attempts; exhaustion
    surfaces as provider-unreachable. Refusals are terminal immediately. An
    optional concurrency limit bounds in-flight provider calls.
    """

    def __init__(
        self,
        provider: Provider,
        audit_hook: Optional[AuditHook] = None,
        max_concurrent: Optional[int] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._provider = provider
        self._audit_hook = audit_hook
        self._sleep = sleep
        self._limiter = (
            threading.BoundedSemaphore(max_concurrent) if max_concurrent else None
        )

    def complete(self, prompt: RenderedPrompt, params: GenerationParams) -> LlmResult:
        if params is None:
            raise ValidationFailedError("generation params are required")
        started = time.monotonic()
        last_exc: Optional[ProviderError] = None
        raw: Optional[str] = None
        for attempt in range(params.retries):
            try:
                if self._limiter is not None:
                    with self._limiter:
                        raw = self._provider.complete(prompt, params)
                else:
                    raw = self._provider.complete(prompt, params)
                break
            except ProviderError as exc:
                if not exc.retryable:
                    raise
                last_exc = exc
                if attempt + 1 < params.retries:
                    self._sleep(0.25 * (2**attempt))
        if raw is None:
            from .errors import ProviderUnreachableError

            raise ProviderUnreachableError(
                f"provider failed after {params.retries} attempts: {last_exc}"
            ) from last_exc
        latency = time.monotonic() - started
        result = LlmResult(
            raw_text=raw,
            model_id=params.model_id,
            latency_s=latency,
            token_usage={
                "prompt_tokens": len(prompt.system.split()) + len(prompt.user.split()),
                "completion_tokens": len(raw.split()),
            },
        )
        if self._audit_hook is not None:
            self._audit_hook(
                {
                    "timestamp": datetime.now(timezone.utc).isoformat(),
                    "template_name": prompt.template_name,
                    "bindings_digest": prompt.bindings_digest,
                    "model_id": params.model_id,
                    "raw_response": raw,
                }
            )
        return result


# --- response parsing ----------------------------------------------------


@dataclass(frozen=True)
class Answer:
    text: str
    kind: str = "answer"


@dataclass(frozen=True)
class NoAnswer:
    kind: str = "no_answer"


_NO_ANSWER_RE = re.compile(r"^[\s\"'“‘]*no answer(?![a-z0-9])", re.IGNORECASE)


def parse_answer(raw: str) -> Union[Answer, NoAnswer]:
    """Classify a QA completion and cap answers at three sentences.

    A completion counts as a refusal exactly when, after trimming leading
    whitespace and quotes, it starts with the phrase "no answer" (case
    insensitive) not followed by another letter or digit.
    """
    if raw is None or not raw.strip():
        raise ValidationFailedError("empty model response")
    if _NO_ANSWER_RE.match(raw):
        return NoAnswer()
    sentences = segment_sentences(raw)
    return Answer(text=" ".join(sentences[:MAX_ANSWER_SENTENCES]))


_LINE_PREFIX_RE = re.compile(r"^\s*(?:\d+[.)]\s*|[-*]\s+)?")

# lenient versus the prompt's "three words or less": models overrun
DEFAULT_ANCHOR_WORD_CAP = 6


def parse_entity_list(raw: str, word_cap: int = DEFAULT_ANCHOR_WORD_CAP) -> list[tuple[str, str]]:
    """Parse ``anchor | question`` lines into (question, anchor_phrase) pairs.

    Numbering and bullets are tolerated. Lines without a pipe, with an empty
    side, or whose anchor exceeds ``word_cap`` words are dropped; order is
    preserved and duplicate anchors are kept for the caller to resolve.
    """
    pairs: list[tuple[str, str]] = []
    for line in raw.splitlines():
        stripped = _LINE_PREFIX_RE.sub("", line).strip()
        if not stripped or "|" not in stripped:
            continue
        anchor, _, question = stripped.partition("|")
        anchor = anchor.strip().strip('"')
        question = question.strip()
        if not anchor or not question:
            continue
        if len(anchor.split()) > word_cap:
            continue
        pairs.append((question, anchor))
    return pairs


# --- offline providers ----------------------------------------------------


class MockProvider:
    """Deterministic rule-based provider driven by the rendered prompt.

    QA prompts are answered with the opening sentences of the supplied
    context, a scripted override, or "No answer." (forced by a scripted
    entry, an ``(unanswerable)`` marker in the question, or a seeded hash of
    the question when ``no_answer_rate`` is set). Extraction picks verbatim
    acronyms and long words from the abstract. All outputs are pure
    functions of the prompt and constructor arguments.
    """

    _ACRONYM_OR_LONG_RE = re.compile(r"\b(?:[A-Z][A-Z0-9-]{2,}|[a-z][a-z-]{8,})\b")

    def __init__(
        self,
        seed: int = 0,
        no_answer_rate: float = 0.0,
        scripted: Optional[dict[str, str]] = None,
        max_entities: int = 4,
    ):
        if not 0.0 <= no_answer_rate <= 1.0:
            raise ValidationFailedError("no_answer_rate must be in [0, 1]")
        self.seed = seed
        self.no_answer_rate = no_answer_rate
        self.scripted = dict(scripted or {})
        self.max_entities = max_entities
        self.calls: list[str] = []  # template names, for assertions

    def complete(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        self.calls.append(prompt.template_name)
        if prompt.template_name == "question_answering":
            return self._answer(prompt.user)
        if prompt.template_name == "entity_extraction":
            return self._extract(prompt.user)
        if prompt.template_name == "question_generation":
            return self._suggest(prompt.user)
        raise ProviderRefusalError(f"mock cannot serve template {prompt.template_name!r}")

    # QA: the real block is the last Context/Question pair before the
    # trailing "Answer:" cue (example blocks precede it).
    def _answer(self, user: str) -> str:
        q_start = user.rfind("\nQuestion: ")
        c_start = user.rfind("\nContext: ")
        if q_start == -1 or c_start == -1 or c_start > q_start:
            raise ProviderRefusalError("mock could not locate question in QA prompt")
        a_start = user.rfind("\nAnswer:")
        question = user[q_start + len("\nQuestion: ") : a_start].strip()
        context = user[c_start + len("\nContext: ") : q_start].strip()

        if question in self.scripted:
            return self.scripted[question]
        if "(unanswerable)" in question or self._hash_refuses(question):
            return "No answer."
        if not context:
            return "No answer."
        sentences = segment_sentences(context)
        return " ".join(sentences[:2])

    def _hash_refuses(self, question: str) -> bool:
        if self.no_answer_rate <= 0.0:
            return False
        digest = hashlib.blake2b(
            f"{self.seed}|{question}".encode("utf-8"), digest_size=8
        ).digest()
        fraction = int.from_bytes(digest, "little") / 2**64
        return fraction < self.no_answer_rate

    def _extract(self, user: str) -> str:
        marker = "Abstract: "
        start = user.find(marker)
        if start == -1:
            raise ProviderRefusalError("mock could not locate abstract in extraction prompt")
        abstract = user[start + len(marker) :].split("\n", 1)[0]
        seen: set[str] = set()
        lines: list[str] = []
        for match in self._ACRONYM_OR_LONG_RE.finditer(abstract):
            token = match.group(0)
            key = token.lower()
            if key in seen:
                continue
            seen.add(key)
            lines.append(f"{len(lines) + 1}. {token} | What does {token} refer to in this paper?")
            if len(lines) >= self.max_entities:
                break
        return "\n".join(lines)

    def _suggest(self, user: str) -> str:
        marker = 'Target span: "'
        start = user.find(marker)
        if start == -1:
            raise ProviderRefusalError("mock could not locate target span")
        rest = user[start + len(marker) :]
        end = rest.find('", in the sentence')
        span = rest[:end] if end != -1 else rest.split('"', 1)[0]
        return f'What is meant by "{span}"?'


class HttpChatProvider:
    """Chat-completion HTTP provider.

    Wire contract: ``POST {base}/completions`` with ``{model_id, messages:
    [{role, content}], temperature, max_tokens}`` returns ``{"text": ...}``.
    Server failures, rate limits, and timeouts surface as retryable provider
    errors so the gateway's backoff applies; other rejections are terminal.
    """

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        session=None,
    ):
        import requests

        self.base_url = base_url.rstrip("/")
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._session = session or requests.Session()

    def complete(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        import requests

        from .errors import ProviderTimeoutError, ProviderUnreachableError

        body = {
            "model_id": params.model_id,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        }
        try:
            resp = self._session.post(
                f"{self.base_url}/completions",
                json=body,
                headers=self._headers,
                timeout=params.timeout_s,
            )
        except requests.Timeout as exc:
            raise ProviderTimeoutError(
                f"chat provider timed out after {params.timeout_s}s"
            ) from exc
        except requests.ConnectionError as exc:
            raise ProviderUnreachableError(f"chat provider unreachable: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderUnreachableError(f"chat provider returned {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderRefusalError(f"chat provider rejected request: {resp.status_code}")
        try:
            text = resp.json()["text"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderRefusalError(f"chat provider returned malformed payload: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderRefusalError("chat provider returned non-text payload")
        return text


class CannedProvider:
    """Replays a fixed response list in order; raises when exhausted."""

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._cursor = 0
        self.prompts: list[RenderedPrompt] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "CannedProvider":
        payload = json.loads(Path(path).read_text("utf-8"))
        responses = payload["responses"] if isinstance(payload, dict) else payload
        return cls(responses)

    @property
    def remaining(self) -> int:
        return len(self._responses) - self._cursor

    def complete(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        self.prompts.append(prompt)
        if self._cursor >= len(self._responses):
            raise ProviderRefusalError(
                f"canned provider exhausted after {len(self._responses)} responses"
            )
        response = self._responses[self._cursor]
        self._cursor += 1
        return response

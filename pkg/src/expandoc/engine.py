"""Expansion engine: entities, anchored questions, answers, and trees.

An expansion starts from an anchor: a character span in a node's display
text (the abstract for the root, the answer text for any other node). The
anchor plus a question kind resolves to a concrete question; retrieval over
the paper's chunks feeds the QA prompt; an Answer becomes a new child node
with paragraph-level attribution, while a NoAnswer leaves the tree
untouched. Trees serialize deterministically: replaying the same operations
against the same providers yields byte-identical JSON.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from .config import Settings
from .document import PaperDocument
from .embedding import EmbeddingClient
from .errors import (
    DepthExceededError,
    InvalidAnchorError,
    NotFoundError,
    ValidationFailedError,
)
from .index import RetrievalResult, VectorIndex
from .llm import (
    Answer,
    Gateway,
    GenerationParams,
    NoAnswer,
    format_extraction_example,
    format_qa_example,
    load_extraction_examples,
    load_qa_examples,
    load_template,
    parse_answer,
    parse_entity_list,
    render_prompt,
)

QUESTION_KINDS = ("define", "expand", "why", "custom")

ROOT_NODE_ID = "root"

_TREE_NAMESPACE = uuid.uuid5(uuid.NAMESPACE_URL, "expandoc/tree")


def resolve_question(kind: str, selection: str, custom_question: Optional[str] = None) -> str:
    """Map a question kind and anchored selection to concrete question text."""
    if kind not in QUESTION_KINDS:
        raise ValidationFailedError(f"unknown question kind: {kind!r}")
    if kind == "custom":
        if not custom_question or not custom_question.strip():
            raise ValidationFailedError("custom questions require question text")
        return custom_question.strip()
    if kind == "define":
        return f"What does '{selection}' mean in this paper?"
    if kind == "expand":
        return f"Tell me more about '{selection}'."
    return f"Why '{selection}'? What is the motivation or justification?"


@dataclass(frozen=True)
class ExpandableEntity:
    anchor: str
    start: int
    end: int
    suggested_question: Optional[str] = None

    def to_payload(self) -> dict:
        # stored entities are exactly the dry-run survivors, hence verified
        return {
            "anchor": self.anchor,
            "start": self.start,
            "end": self.end,
            "suggested_question": self.suggested_question,
            "verified": True,
        }


@dataclass(frozen=True)
class Attribution:
    paragraph_index: int
    score: float
    section: Optional[str]
    text: str

    def to_payload(self) -> dict:
        return {
            "paragraph_index": self.paragraph_index,
            "score": self.score,
            "section": self.section,
            "text": self.text,
        }


@dataclass
class ExpansionNode:
    id: str
    parent: Optional[str]
    anchor: Optional[dict]  # {"node_id", "start", "end"} into the parent's display text
    kind: Optional[str]
    question: Optional[str]
    answer: str
    attribution: Optional[Attribution]
    collapsed: bool = False
    depth: int = 0

    @property
    def display_text(self) -> str:
        return self.answer

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "anchor": dict(self.anchor) if self.anchor else None,
            "kind": self.kind,
            "question": self.question,
            "answer": self.answer,
            "attribution": self.attribution.to_payload() if self.attribution else None,
            "collapsed": self.collapsed,
            "depth": self.depth,
        }


class ExpansionTree:
    """Rooted tree of expansions; the root displays the abstract."""

    def __init__(self, tree_id: str, paper_id: str, abstract_text: str):
        if not abstract_text or not abstract_text.strip():
            raise ValidationFailedError("tree root requires abstract text")
        self.tree_id = tree_id
        self.paper_id = paper_id
        self._nodes: dict[str, ExpansionNode] = {}
        self._order: list[str] = []
        self._next_ordinal = 0
        root = ExpansionNode(
            id=ROOT_NODE_ID,
            parent=None,
            anchor=None,
            kind=None,
            question=None,
            answer=abstract_text,
            attribution=None,
            collapsed=False,
            depth=0,
        )
        self._nodes[root.id] = root
        self._order.append(root.id)

    # --- access ---------------------------------------------------------

    @property
    def root(self) -> ExpansionNode:
        return self._nodes[ROOT_NODE_ID]

    def node(self, node_id: str) -> ExpansionNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NotFoundError(f"node not found: {node_id}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def nodes(self) -> list[ExpansionNode]:
        """Nodes in creation order (root first)."""
        return [self._nodes[i] for i in self._order]

    def children_of(self, node_id: str) -> list[ExpansionNode]:
        return [n for n in self.nodes() if n.parent == node_id]

    def __len__(self) -> int:
        return len(self._nodes)

    # --- mutation -------------------------------------------------------

    def _mint_id(self) -> str:
        node_id = str(
            uuid.uuid5(_TREE_NAMESPACE, f"{self.paper_id}/{self.tree_id}/{self._next_ordinal}")
        )
        self._next_ordinal += 1
        return node_id

    def add_node(
        self,
        parent_id: str,
        anchor: dict,
        kind: str,
        question: str,
        answer: str,
        attribution: Optional[Attribution],
        max_depth: int,
    ) -> ExpansionNode:
        parent = self.node(parent_id)
        depth = parent.depth + 1
        if depth > max_depth:
            raise DepthExceededError(
                f"expansion depth {depth} exceeds the maximum of {max_depth}"
            )
        node = ExpansionNode(
            id=self._mint_id(),
            parent=parent_id,
            anchor=anchor,
            kind=kind,
            question=question,
            answer=answer,
            attribution=attribution,
            collapsed=False,
            depth=depth,
        )
        self._nodes[node.id] = node
        self._order.append(node.id)
        return node

    def set_collapsed(self, node_id: str, collapsed: bool) -> ExpansionNode:
        """Idempotent; the root cannot be collapsed."""
        node = self.node(node_id)
        if node_id == ROOT_NODE_ID and collapsed:
            raise ValidationFailedError("the root node cannot be collapsed")
        node.collapsed = collapsed
        return node

    def delete_subtree(self, node_id: str) -> list[str]:
        """Remove a node and all descendants; deleting the root is refused."""
        if node_id == ROOT_NODE_ID:
            raise ValidationFailedError("the root node cannot be deleted")
        self.node(node_id)
        doomed = {node_id}
        changed = True
        while changed:
            changed = False
            for n in self._nodes.values():
                if n.parent in doomed and n.id not in doomed:
                    doomed.add(n.id)
                    changed = True
        removed = [i for i in self._order if i in doomed]
        for nid in doomed:
            del self._nodes[nid]
        self._order = [i for i in self._order if i not in doomed]
        return removed

    # --- serialization ----------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "tree_id": self.tree_id,
            "paper_id": self.paper_id,
            "next_ordinal": self._next_ordinal,
            "nodes": [n.to_payload() for n in self.nodes()],
        }

    def to_json(self) -> str:
        """Deterministic byte representation of the tree."""
        return json.dumps(self.to_payload(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_payload(cls, payload: dict) -> "ExpansionTree":
        nodes = payload.get("nodes") or []
        root_payload = next((n for n in nodes if n["id"] == ROOT_NODE_ID), None)
        if root_payload is None:
            raise ValidationFailedError("tree payload has no root node")
        tree = cls(
            tree_id=payload["tree_id"],
            paper_id=payload["paper_id"],
            abstract_text=root_payload["answer"],
        )
        tree.root.collapsed = bool(root_payload.get("collapsed", False))
        for n in nodes:
            if n["id"] == ROOT_NODE_ID:
                continue
            attribution = None
            if n.get("attribution"):
                a = n["attribution"]
                attribution = Attribution(
                    paragraph_index=a["paragraph_index"],
                    score=a["score"],
                    section=a.get("section"),
                    text=a["text"],
                )
            node = ExpansionNode(
                id=n["id"],
                parent=n["parent"],
                anchor=n.get("anchor"),
                kind=n.get("kind"),
                question=n.get("question"),
                answer=n["answer"],
                attribution=attribution,
                collapsed=bool(n.get("collapsed", False)),
                depth=n["depth"],
            )
            tree._nodes[node.id] = node
            tree._order.append(node.id)
        tree._next_ordinal = payload.get("next_ordinal", len(nodes) - 1)
        return tree


@dataclass(frozen=True)
class ExpandOutcome:
    """Result of an expansion request: a new node, or a refusal."""

    no_answer: bool
    node: Optional[ExpansionNode] = None
    retrieval: tuple[RetrievalResult, ...] = ()


@dataclass
class _CacheEntry:
    result: Union[Answer, NoAnswer]
    retrieval: tuple[RetrievalResult, ...]
    expires_at: float


class ExpansionEngine:
    """Coordinates retrieval, prompting, attribution, and tree mutation."""

    def __init__(
        self,
        settings: Settings,
        gateway: Gateway,
        embedder: EmbeddingClient,
        chunk_index: VectorIndex,
        paragraph_index: VectorIndex,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.settings = settings
        self.gateway = gateway
        self.embedder = embedder
        self.chunk_index = chunk_index
        self.paragraph_index = paragraph_index
        self._clock = clock
        self._qa_cache: dict[tuple[str, str], _CacheEntry] = {}
        self._answer_params = GenerationParams(
            model_id=settings.answerer_model,
            temperature=settings.temperature,
            max_output_tokens=settings.max_output_tokens,
        )
        self._extract_params = GenerationParams(
            model_id=settings.extractor_model,
            temperature=settings.temperature,
            max_output_tokens=settings.max_output_tokens,
        )
        self._qa_template = load_template("question_answering")
        self._extraction_template = load_template("entity_extraction")
        self._suggestion_template = load_template("question_generation")
        self._qa_examples = [format_qa_example(e) for e in load_qa_examples()]
        self._extraction_examples = [
            format_extraction_example(e) for e in load_extraction_examples()
        ]

    # --- question answering ----------------------------------------------

    def answer_question(
        self, paper_id: str, question: str, use_cache: bool = True
    ) -> tuple[Union[Answer, NoAnswer], tuple[RetrievalResult, ...]]:
        """Retrieve context and answer; results are cached per (paper, question)."""
        if not question or not question.strip():
            raise ValidationFailedError("question must be non-empty")
        question = question.strip()
        key = (paper_id, question)
        now = self._clock()
        if use_cache:
            hit = self._qa_cache.get(key)
            if hit is not None and hit.expires_at > now:
                return hit.result, hit.retrieval

        query = self.embedder.embed([question])[0]
        hits = tuple(self.chunk_index.top_k(query, paper_id, k=self.settings.top_k_chunks))
        if not hits:
            result: Union[Answer, NoAnswer] = NoAnswer()
        else:
            prompt = render_prompt(
                self._qa_template,
                {
                    "Context": "\n\n".join(h.text for h in hits),
                    "Question": question,
                    "Response Length": self.settings.response_length,
                    "Examples": self._qa_examples,
                },
            )
            raw = self.gateway.complete(prompt, self._answer_params)
            result = parse_answer(raw.raw_text)

        self._qa_cache[key] = _CacheEntry(
            result=result, retrieval=hits, expires_at=now + self.settings.cache_ttl_s
        )
        return result, hits

    def attribute(self, paper_id: str, answer_text: str) -> Optional[Attribution]:
        """Most similar body paragraph to the answer, by cosine argmax."""
        if not answer_text or not answer_text.strip():
            raise ValidationFailedError("cannot attribute empty answer text")
        query = self.embedder.embed([answer_text])[0]
        best = self.paragraph_index.argmax(query, paper_id)
        if best is None:
            return None
        return Attribution(
            paragraph_index=best.ordinal,
            score=best.score,
            section=best.meta.get("section"),
            text=best.text,
        )

    # --- entity extraction -------------------------------------------------

    def extract_entities(self, doc: PaperDocument) -> list[ExpandableEntity]:
        """Expandable entities for the abstract, dry-run filtered.

        The extractor proposes verbatim anchor phrases; phrases that cannot
        be located in the abstract, exceed the word cap, or overlap an
        earlier anchor are dropped. Each survivor is kept only if a trial
        "tell me more" expansion actually yields an answer, and then gets a
        model-suggested question.
        """
        abstract = doc.abstract_text
        prompt = render_prompt(
            self._extraction_template,
            {"Title": doc.title, "Abstract": abstract, "Examples": self._extraction_examples},
        )
        raw = self.gateway.complete(prompt, self._extract_params)
        pairs = parse_entity_list(raw.raw_text, word_cap=self.settings.max_anchor_words)

        resolved: list[ExpandableEntity] = []
        claimed: list[tuple[int, int]] = []
        for _question, anchor in pairs:
            span = _first_free_occurrence(abstract, anchor, claimed)
            if span is None:
                continue
            claimed.append(span)
            resolved.append(ExpandableEntity(anchor=anchor, start=span[0], end=span[1]))
        resolved.sort(key=lambda e: e.start)

        survivors: list[ExpandableEntity] = []
        for entity in resolved:
            trial_question = resolve_question("expand", entity.anchor)
            result, _hits = self.answer_question(doc.paper_id, trial_question)
            if isinstance(result, NoAnswer):
                continue
            suggestion = self._suggest_question(doc, entity)
            survivors.append(replace(entity, suggested_question=suggestion))
        return survivors

    def _suggest_question(self, doc: PaperDocument, entity: ExpandableEntity) -> str:
        sentence = _containing_sentence(doc, entity.start)
        return self.suggest_question(doc, entity.anchor, sentence)

    def suggest_question(self, doc: PaperDocument, selection: str, sentence: str) -> str:
        """Model-suggested question for a selection (used on-the-fly for highlights)."""
        if not selection or not selection.strip():
            raise ValidationFailedError("selection must be non-empty")
        prompt = render_prompt(
            self._suggestion_template,
            {"Abstract": doc.abstract_text, "Entity": selection, "Sentence": sentence},
        )
        raw = self.gateway.complete(prompt, self._extract_params)
        return raw.raw_text.strip().splitlines()[0].strip()

    # --- tree operations ---------------------------------------------------

    def new_tree(self, doc: PaperDocument, tree_id: Optional[str] = None) -> ExpansionTree:
        return ExpansionTree(
            tree_id=tree_id or uuid.uuid4().hex[:12],
            paper_id=doc.paper_id,
            abstract_text=doc.abstract_text,
        )

    def expand(
        self,
        tree: ExpansionTree,
        parent_id: str,
        start: int,
        end: int,
        kind: str,
        custom_question: Optional[str] = None,
    ) -> ExpandOutcome:
        """Answer an anchored question and, on success, grow the tree.

        A NoAnswer outcome performs no mutation at all: same tree object,
        same serialization. Anchor offsets index the parent node's display
        text and must address a non-empty span inside it.
        """
        parent = tree.node(parent_id)
        if kind == "why" and self.settings.palette_variant == "refined":
            raise ValidationFailedError(
                "the 'why' question kind is disabled for the refined palette"
            )
        selection = _validate_anchor(parent.display_text, start, end)
        question = resolve_question(kind, selection, custom_question)

        prospective_depth = parent.depth + 1
        if prospective_depth > self.settings.max_depth:
            raise DepthExceededError(
                f"expansion depth {prospective_depth} exceeds the maximum of "
                f"{self.settings.max_depth}"
            )

        result, hits = self.answer_question(tree.paper_id, question)
        if isinstance(result, NoAnswer):
            return ExpandOutcome(no_answer=True, retrieval=hits)

        attribution = self.attribute(tree.paper_id, result.text)
        node = tree.add_node(
            parent_id=parent_id,
            anchor={"node_id": parent_id, "start": start, "end": end},
            kind=kind,
            question=question,
            answer=result.text,
            attribution=attribution,
            max_depth=self.settings.max_depth,
        )
        return ExpandOutcome(no_answer=False, node=node, retrieval=hits)

    def collapse(self, tree: ExpansionTree, node_id: str) -> ExpansionNode:
        return tree.set_collapsed(node_id, True)

    def expand_again(self, tree: ExpansionTree, node_id: str) -> ExpansionNode:
        return tree.set_collapsed(node_id, False)

    def delete(self, tree: ExpansionTree, node_id: str) -> list[str]:
        return tree.delete_subtree(node_id)


def _validate_anchor(display_text: str, start: int, end: int) -> str:
    if not isinstance(start, int) or not isinstance(end, int):
        raise InvalidAnchorError("anchor offsets must be integers")
    if start < 0 or end > len(display_text) or start >= end:
        raise InvalidAnchorError(
            f"anchor [{start}, {end}) out of range for text of length {len(display_text)}"
        )
    selection = display_text[start:end]
    if not selection.strip():
        raise InvalidAnchorError("anchor selects only whitespace")
    return selection


def _first_free_occurrence(
    text: str, phrase: str, claimed: list[tuple[int, int]]
) -> Optional[tuple[int, int]]:
    """First occurrence of ``phrase`` in ``text`` that overlaps no claimed span."""
    search_from = 0
    while True:
        start = text.find(phrase, search_from)
        if start == -1:
            return None
        end = start + len(phrase)
        if not any(s < end and start < e for s, e in claimed):
            return (start, end)
        search_from = start + 1


def _containing_sentence(doc: PaperDocument, char_offset: int) -> str:
    """The abstract sentence whose span covers ``char_offset``."""
    cursor = 0
    for sent in doc.abstract_sentences:
        end = cursor + len(sent.text)
        if char_offset < end:
            return sent.text
        cursor = end + 1  # separator space
    return doc.abstract_sentences[-1].text

import { el } from "../dom";
import type { TreeState } from "../state";
import { ROOT_ID } from "../state";
import { theme } from "../theme";
import type { AbstractPayload, ExpandableEntity } from "../types";
import { renderAnnotatedText, type TextSpan } from "./annotatedText";

export interface AbstractViewCallbacks {
  onEntityClick(entity: ExpandableEntity, element: HTMLElement): void;
}

/**
 * The abstract region: title plus one span per sentence, each followed by a
 * thread container where expansions anchored in that sentence mount. Verified
 * entities are underlined blue; anchors that already carry an expansion are
 * restyled purple.
 */
export class AbstractView {
  readonly element: HTMLElement;
  private readonly callbacks: AbstractViewCallbacks;
  private payload: AbstractPayload | null = null;
  private sentenceStarts: number[] = [];

  constructor(host: HTMLElement, callbacks: AbstractViewCallbacks) {
    this.callbacks = callbacks;
    this.element = el("div", { class: "abstract-region" });
    host.append(this.element);
  }

  render(payload: AbstractPayload, tree: TreeState): void {
    this.payload = payload;
    this.sentenceStarts = [];
    let offset = 0;
    for (const sentence of payload.sentences) {
      this.sentenceStarts.push(offset);
      offset += sentence.length + 1; // sentences join with a single space
    }

    this.element.innerHTML = "";
    this.element.append(el("h1", { class: "paper-title", text: payload.title }));
    const body = el("div", {
      class: "abstract",
      "data-display-of": ROOT_ID,
    });
    payload.sentences.forEach((_, index) => {
      const sentenceEl = el("span", {
        class: "sentence",
        "data-sentence": String(index),
      });
      body.append(sentenceEl);
      body.append(
        el("div", { class: "thread", "data-thread-for-sentence": String(index) }),
      );
      this.rebuildSentence(index, tree, sentenceEl);
    });
    this.element.append(body);
  }

  /** Re-render one sentence's text, leaving its expansion thread untouched. */
  rebuildSentence(index: number, tree: TreeState, target?: HTMLElement): void {
    if (!this.payload) {
      return;
    }
    const sentenceEl =
      target ??
      (this.element.querySelector(`[data-sentence="${index}"]`) as HTMLElement | null);
    if (!sentenceEl) {
      return;
    }
    const text = this.payload.sentences[index];
    const gstart = this.sentenceStarts[index];
    const gend = gstart + text.length;

    const spans: TextSpan[] = [];
    for (const entity of this.payload.entities) {
      if (entity.start < gstart || entity.start >= gend) {
        continue;
      }
      const expanded = tree.isSpanExpanded(ROOT_ID, entity.start, entity.end);
      const span: TextSpan = {
        start: entity.start - gstart,
        end: entity.end - gstart,
        className: expanded ? "entity anchor-expanded" : "entity",
        title: entity.suggested_question ?? undefined,
        onClick: (element) => this.callbacks.onEntityClick(entity, element),
      };
      spans.push(span);
    }
    // manual-highlight anchors have no entity span; underline them too
    for (const anchor of tree.expandedSpansOf(ROOT_ID)) {
      if (anchor.start < gstart || anchor.start >= gend) {
        continue;
      }
      const isEntity = this.payload.entities.some(
        (e) => e.start === anchor.start && e.end === anchor.end,
      );
      if (!isEntity) {
        spans.push({
          start: anchor.start - gstart,
          end: Math.min(anchor.end, gend) - gstart,
          className: "anchor-expanded",
        });
      }
    }
    renderAnnotatedText(sentenceEl, text, spans, gstart);
    for (const marked of sentenceEl.querySelectorAll(".anchor-expanded")) {
      (marked as HTMLElement).style.textDecorationColor = theme.expandedUnderline;
    }
    for (const entity of sentenceEl.querySelectorAll(".entity:not(.anchor-expanded)")) {
      (entity as HTMLElement).style.textDecorationColor = theme.entityUnderline;
    }
  }

  rebuildAllSentences(tree: TreeState): void {
    this.payload?.sentences.forEach((_, index) => this.rebuildSentence(index, tree));
  }

  /** Index of the sentence whose [start, end) range contains this offset. */
  sentenceIndexForOffset(offset: number): number {
    let found = 0;
    this.sentenceStarts.forEach((start, index) => {
      if (offset >= start) {
        found = index;
      }
    });
    return found;
  }

  threadForSentence(index: number): HTMLElement | null {
    return this.element.querySelector(`[data-thread-for-sentence="${index}"]`);
  }

  entitySpanAt(start: number): HTMLElement | null {
    return this.element.querySelector(`.entity[data-gstart="${start}"]`);
  }
}

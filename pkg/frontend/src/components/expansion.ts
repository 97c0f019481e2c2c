import { el } from "../dom";
import type { TreeState } from "../state";
import { theme } from "../theme";
import type { ExpansionNode } from "../types";
import { renderAnnotatedText, type TextSpan } from "./annotatedText";

export interface ExpansionCallbacks {
  onToggleCollapse(nodeId: string): void;
  onQuote(nodeId: string): void;
  onHide(nodeId: string): void;
}

/**
 * One expansion block: a header row (question tag, quote, hide) above the
 * answer text, indented one step per tree depth. The answer span doubles as an
 * anchor surface for deeper expansions, so it is rendered through the same
 * offset-carrying annotator as the abstract.
 */
export class ExpansionBlock {
  readonly element: HTMLElement;
  readonly node: ExpansionNode;
  private readonly answerEl: HTMLElement;
  private readonly bodyEl: HTMLElement;
  private fadeTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(node: ExpansionNode, callbacks: ExpansionCallbacks) {
    this.node = node;
    this.element = el("div", {
      class: "expansion",
      "data-node-id": node.id,
      "data-kind": node.kind ?? "",
    });
    this.element.style.marginLeft = `${node.depth * 20}px`;

    const tag = el("button", {
      class: "question-tag",
      type: "button",
      title: node.question ?? "",
      text: node.kind ?? "expand",
    });
    tag.addEventListener("click", () => callbacks.onToggleCollapse(node.id));
    const quote = el("button", {
      class: "quote-button",
      type: "button",
      title: "Show source paragraph",
      text: "quote",
    });
    quote.addEventListener("click", () => callbacks.onQuote(node.id));
    const hide = el("button", {
      class: "hide-button",
      type: "button",
      title: "Hide this expansion",
      text: "hide",
    });
    hide.addEventListener("click", () => callbacks.onHide(node.id));
    this.element.append(el("div", { class: "expansion-header" }, [tag, quote, hide]));

    this.answerEl = el("span", {
      class: "expansion-answer",
      "data-display-of": node.id,
    });
    const thread = el("div", { class: "thread", "data-thread-of": node.id });
    this.bodyEl = el("div", { class: "expansion-body" }, [this.answerEl, thread]);
    this.element.append(this.bodyEl);
    this.setCollapsed(node.collapsed);
  }

  get thread(): HTMLElement {
    return this.bodyEl.querySelector(`[data-thread-of="${this.node.id}"]`) as HTMLElement;
  }

  renderAnswer(tree: TreeState): void {
    const spans: TextSpan[] = tree.expandedSpansOf(this.node.id).map((anchor) => ({
      start: anchor.start,
      end: anchor.end,
      className: "anchor-expanded",
    }));
    renderAnnotatedText(this.answerEl, this.node.answer, spans);
    for (const marked of this.answerEl.querySelectorAll(".anchor-expanded")) {
      (marked as HTMLElement).style.textDecorationColor = theme.expandedUnderline;
    }
  }

  setCollapsed(collapsed: boolean): void {
    this.element.classList.toggle("collapsed", collapsed);
    this.bodyEl.style.display = collapsed ? "none" : "";
  }

  /** New text arrives blue, then settles to light gray after a beat. */
  startFreshFade(): void {
    this.answerEl.classList.add("fresh");
    this.answerEl.style.color = theme.freshText;
    this.fadeTimer = setTimeout(() => {
      this.answerEl.classList.remove("fresh");
      this.answerEl.classList.add("settled");
      this.answerEl.style.color = theme.settledText;
      this.fadeTimer = null;
    }, theme.fadeMs);
  }

  dispose(): void {
    if (this.fadeTimer !== null) {
      clearTimeout(this.fadeTimer);
      this.fadeTimer = null;
    }
    this.element.remove();
  }
}

import { el } from "../dom";
import type { PaletteVariant, QuestionKind } from "../types";

export interface PaletteTarget {
  nodeId: string;
  start: number;
  end: number;
  selection: string;
  /** Top-1 suggested question, or null when no suggestion is available. */
  suggested: string | null;
}

export interface PaletteCallbacks {
  onAsk(target: PaletteTarget, kind: QuestionKind, customQuestion?: string): void;
}

/**
 * The question palette popover. Shown centered above the selection on
 * entity click or manual highlight. The base variant offers Suggested,
 * Define, Expand and Why; the refined variant drops Why and makes the
 * suggested question editable before asking.
 */
export class QuestionPalette {
  readonly element: HTMLElement;
  private readonly variant: PaletteVariant;
  private readonly callbacks: PaletteCallbacks;
  private target: PaletteTarget | null = null;
  private disabled = false;

  constructor(host: HTMLElement, variant: PaletteVariant, callbacks: PaletteCallbacks) {
    this.variant = variant;
    this.callbacks = callbacks;
    this.element = el("div", { class: "palette", hidden: "" });
    this.element.style.position = "absolute";
    host.append(this.element);
  }

  get isOpen(): boolean {
    return !this.element.hasAttribute("hidden");
  }

  openFor(target: PaletteTarget, anchorEl?: HTMLElement): void {
    this.target = target;
    this.element.innerHTML = "";
    this.element.removeAttribute("hidden");

    if (target.suggested !== null) {
      this.element.append(this.buildSuggestedSlot(target.suggested));
    }
    this.element.append(this.buildKindButton("define", "Define"));
    this.element.append(this.buildKindButton("expand", "Expand"));
    if (this.variant === "base") {
      this.element.append(this.buildKindButton("why", "Why"));
    }
    this.applyDisabled();
    if (anchorEl) {
      this.positionAbove(anchorEl);
    }
  }

  close(): void {
    this.element.setAttribute("hidden", "");
    this.element.innerHTML = "";
    this.target = null;
  }

  /** One expansion in flight per tree: the palette locks while pending. */
  setDisabled(disabled: boolean): void {
    this.disabled = disabled;
    this.applyDisabled();
  }

  private applyDisabled(): void {
    this.element.classList.toggle("palette-disabled", this.disabled);
    for (const control of this.element.querySelectorAll("button, input")) {
      if (this.disabled) {
        control.setAttribute("disabled", "");
      } else {
        control.removeAttribute("disabled");
      }
    }
  }

  private ask(kind: QuestionKind, customQuestion?: string): void {
    if (this.disabled || !this.target) {
      return;
    }
    this.callbacks.onAsk(this.target, kind, customQuestion);
  }

  private buildKindButton(kind: QuestionKind, label: string): HTMLElement {
    const button = el("button", { class: `palette-btn palette-${kind}`, text: label });
    button.addEventListener("click", () => this.ask(kind));
    return button;
  }

  private buildSuggestedSlot(question: string): HTMLElement {
    const slot = el("div", { class: "palette-suggested" });
    if (this.variant === "refined") {
      // editable suggestion: the user may rewrite it before asking
      const input = el("input", { class: "palette-suggested-input", type: "text" });
      (input as HTMLInputElement).value = question;
      const ask = el("button", { class: "palette-btn palette-ask-suggested", text: "Ask" });
      ask.addEventListener("click", () =>
        this.ask("custom", (input as HTMLInputElement).value),
      );
      slot.append(input, ask);
    } else {
      const button = el("button", {
        class: "palette-btn palette-ask-suggested",
        text: question,
      });
      button.addEventListener("click", () => this.ask("custom", question));
      slot.append(button);
    }
    return slot;
  }

  private positionAbove(anchorEl: HTMLElement): void {
    const rect = anchorEl.getBoundingClientRect();
    const width = this.element.offsetWidth || 0;
    this.element.style.left = `${rect.left + rect.width / 2 - width / 2}px`;
    this.element.style.top = `${rect.top - (this.element.offsetHeight || 0) - 8}px`;
  }
}

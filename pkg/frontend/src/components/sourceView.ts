import { el } from "../dom";
import type { SourceLocator } from "../types";

interface KnownParagraph {
  index: number;
  text: string;
  section: string | null;
}

/**
 * Plain-text source panel. The service exposes paragraph content only through
 * abstract and attribution payloads, so this view accumulates whatever
 * paragraphs the session has seen and scrolls to the requested one; the
 * locator link points at the original document for everything else.
 */
export class SourceView {
  readonly element: HTMLElement;
  private paragraphs = new Map<number, KnownParagraph>();
  private title = "";
  private abstractText = "";

  constructor(host: HTMLElement) {
    this.element = el("div", { class: "source-view", hidden: "hidden" });
    host.append(this.element);
  }

  setAbstract(title: string, abstract: string): void {
    this.title = title;
    this.abstractText = abstract;
  }

  learnParagraph(index: number, text: string, section: string | null): void {
    this.paragraphs.set(index, { index, text, section });
  }

  open(locator: SourceLocator): void {
    this.element.innerHTML = "";
    this.element.removeAttribute("hidden");
    this.element.append(el("h2", { class: "source-title", text: this.title }));
    if (this.abstractText) {
      this.element.append(
        el("p", { class: "source-abstract", text: this.abstractText }),
      );
    }
    const list = el("div", { class: "source-paragraphs" });
    const known = [...this.paragraphs.values()].sort((a, b) => a.index - b.index);
    let target: HTMLElement | null = null;
    for (const para of known) {
      const block = el("div", {
        class: "source-paragraph",
        "data-paragraph-index": String(para.index),
      });
      if (para.section) {
        block.append(el("h3", { class: "source-section", text: para.section }));
      }
      block.append(el("p", { text: para.text }));
      if (para.index === locator.paragraph_index) {
        block.classList.add("source-highlight");
        target = block;
      }
      list.append(block);
    }
    this.element.append(list);
    if (locator.source_uri) {
      this.element.append(
        el("a", {
          class: "source-link",
          href: locator.source_uri,
          target: "_blank",
          rel: "noopener",
          text: "open original document",
        }),
      );
    }
    target?.scrollIntoView?.({ block: "center" });
  }

  close(): void {
    this.element.setAttribute("hidden", "hidden");
  }
}

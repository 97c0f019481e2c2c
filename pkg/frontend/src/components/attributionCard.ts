import { el } from "../dom";
import type { AttributionPayload } from "../types";

export interface AttributionCardCallbacks {
  onOpenSource(payload: AttributionPayload): void;
}

/** Card showing the paragraph an answer was pinned to, with a jump to source. */
export class AttributionCard {
  readonly element: HTMLElement;
  private readonly callbacks: AttributionCardCallbacks;

  constructor(host: HTMLElement, callbacks: AttributionCardCallbacks) {
    this.callbacks = callbacks;
    this.element = el("div", { class: "attribution-card", hidden: "hidden" });
    host.append(this.element);
  }

  show(payload: AttributionPayload | null): void {
    this.element.innerHTML = "";
    this.element.removeAttribute("hidden");
    if (payload === null) {
      this.element.append(
        el("p", { class: "attribution-empty", text: "No attribution available." }),
      );
      return;
    }
    this.element.append(
      el("blockquote", { class: "attribution-text", text: payload.paragraph_text }),
    );
    const meta = el("div", { class: "attribution-meta" });
    meta.append(
      el("span", {
        class: "attribution-section",
        text: payload.source_locator.section ?? "(no section)",
      }),
    );
    meta.append(
      el("span", {
        class: "attribution-score",
        text: `match ${payload.score.toFixed(3)}`,
      }),
    );
    this.element.append(meta);

    const open = el("button", {
      class: "open-source",
      type: "button",
      text: "View in source",
    });
    open.addEventListener("click", () => this.callbacks.onOpenSource(payload));
    this.element.append(open);
    if (payload.source_locator.source_uri) {
      this.element.append(
        el("a", {
          class: "source-link",
          href: payload.source_locator.source_uri,
          target: "_blank",
          rel: "noopener",
          text: "original document",
        }),
      );
    }
  }

  hide(): void {
    this.element.setAttribute("hidden", "hidden");
  }
}

import { el } from "../dom";

/** A styled, clickable span over [start, end) of a node's display text. */
export interface TextSpan {
  start: number;
  end: number;
  className: string;
  title?: string;
  onClick?: (element: HTMLElement) => void;
}

/**
 * Render `text` into `container` as a run of spans. Covered ranges get the
 * requested class; uncovered runs become plain spans. Every span carries
 * data-gstart with its offset into the node's display text, which is what
 * the highlight-to-ask handler uses to map a DOM selection back to anchor
 * offsets. Overlapping spans are dropped after the first so a malformed
 * span list can never corrupt the text.
 */
export function renderAnnotatedText(
  container: HTMLElement,
  text: string,
  spans: TextSpan[],
  baseOffset = 0,
): void {
  container.innerHTML = "";
  const usable: TextSpan[] = [];
  let lastEnd = -1;
  for (const span of [...spans].sort((a, b) => a.start - b.start || a.end - b.end)) {
    if (span.start < lastEnd || span.start >= span.end || span.end > text.length) {
      continue;
    }
    usable.push(span);
    lastEnd = span.end;
  }

  let cursor = 0;
  for (const span of usable) {
    if (span.start > cursor) {
      container.append(plainRun(text.slice(cursor, span.start), baseOffset + cursor));
    }
    const node = el("span", {
      class: span.className,
      "data-gstart": String(baseOffset + span.start),
      "data-gend": String(baseOffset + span.end),
      text: text.slice(span.start, span.end),
    });
    if (span.title) {
      node.setAttribute("title", span.title);
    }
    if (span.onClick) {
      node.addEventListener("click", () => span.onClick!(node));
    }
    container.append(node);
    cursor = span.end;
  }
  if (cursor < text.length) {
    container.append(plainRun(text.slice(cursor), baseOffset + cursor));
  }
}

function plainRun(text: string, gstart: number): HTMLElement {
  return el("span", { class: "plain", "data-gstart": String(gstart), text });
}

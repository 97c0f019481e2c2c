import { el } from "../dom";
import { theme } from "../theme";

export type ToastKind = "info" | "no_answer" | "error";

/** Bottom-right toast stack with auto-dismiss. */
export class ToastRegion {
  readonly element: HTMLElement;

  constructor(host: HTMLElement) {
    this.element = el("div", { class: "toast-region", role: "status" });
    this.element.style.position = "fixed";
    this.element.style.right = "16px";
    this.element.style.bottom = "16px";
    host.append(this.element);
  }

  show(message: string, kind: ToastKind = "info"): HTMLElement {
    const toast = el("div", { class: `toast toast-${kind}`, text: message });
    this.element.append(toast);
    setTimeout(() => toast.remove(), theme.toastMs);
    return toast;
  }
}

import { ApiClient, BackendError, type FetchLike } from "./api";
import { AbstractView } from "./components/abstractView";
import { AttributionCard } from "./components/attributionCard";
import { ExpansionBlock } from "./components/expansion";
import { QuestionPalette, type PaletteTarget } from "./components/palette";
import { SourceView } from "./components/sourceView";
import { ToastRegion } from "./components/toast";
import { el } from "./dom";
import { ROOT_ID, TreeState } from "./state";
import type {
  AbstractPayload,
  ExpandableEntity,
  ExpandRequestBody,
  ExpansionNode,
  PaletteVariant,
  QuestionKind,
} from "./types";

export interface AppConfig {
  baseUrl: string;
  paperId: string;
  treeId: string;
  variant?: PaletteVariant;
  fetchFn?: FetchLike;
}

/**
 * Wires the reading surface together: abstract with entity underlines, a
 * question palette over the active anchor, nested expansion threads, the
 * attribution card, and the source panel. All data flows through ApiClient;
 * nothing here talks to the network directly.
 */
export class ExpandocApp {
  readonly api: ApiClient;
  readonly state: TreeState;
  readonly abstractView: AbstractView;
  readonly palette: QuestionPalette;
  readonly toasts: ToastRegion;
  readonly attributionCard: AttributionCard;
  readonly sourceView: SourceView;

  private readonly root: HTMLElement;
  private readonly paperId: string;
  private readonly treeId: string;
  private abstractPayload: AbstractPayload | null = null;
  private blocks = new Map<string, ExpansionBlock>();
  private pendingExpansion = false;

  constructor(root: HTMLElement, config: AppConfig) {
    this.root = root;
    this.paperId = config.paperId;
    this.treeId = config.treeId;
    this.api = new ApiClient(config.baseUrl, config.fetchFn);
    this.state = new TreeState();

    this.abstractView = new AbstractView(root, {
      onEntityClick: (entity, element) => this.openPaletteForEntity(entity, element),
    });
    this.palette = new QuestionPalette(root, config.variant ?? "base", {
      onAsk: (target, kind, customQuestion) => {
        void this.ask(target, kind, customQuestion);
      },
    });
    this.toasts = new ToastRegion(root);
    this.attributionCard = new AttributionCard(root, {
      onOpenSource: (payload) => this.sourceView.open(payload.source_locator),
    });
    this.sourceView = new SourceView(root);
  }

  get isPending(): boolean {
    return this.pendingExpansion;
  }

  /** Fetch abstract and tree, then rebuild the whole reading surface. */
  async load(): Promise<void> {
    let abstract: AbstractPayload;
    try {
      abstract = await this.api.abstract(this.paperId);
    } catch (err) {
      if (err instanceof BackendError && err.status === 409 && err.retryable) {
        this.showStatus("Paper is still being processed. Try again shortly.");
        return;
      }
      this.showStatus("Could not load this paper.");
      throw err;
    }
    this.abstractPayload = abstract;
    this.sourceView.setAbstract(abstract.title, abstract.abstract);

    const treePayload = await this.api.tree(this.paperId, this.treeId);
    this.state.reset(treePayload);

    for (const block of this.blocks.values()) {
      block.dispose();
    }
    this.blocks.clear();
    this.abstractView.render(abstract, this.state);
    for (const node of this.state.all()) {
      if (node.id !== ROOT_ID) {
        this.mountNode(node, { fresh: false });
      }
    }
  }

  private showStatus(message: string): void {
    const existing = this.root.querySelector(".app-status");
    existing?.remove();
    this.root.prepend(el("div", { class: "app-status", text: message }));
  }

  openPaletteForEntity(entity: ExpandableEntity, element?: HTMLElement): void {
    if (this.pendingExpansion) {
      return;
    }
    const target: PaletteTarget = {
      nodeId: ROOT_ID,
      start: entity.start,
      end: entity.end,
      selection: entity.anchor,
      suggested: entity.suggested_question,
    };
    this.palette.openFor(target, element ?? undefined);
  }

  /**
   * Palette for an arbitrary highlighted range. The suggested slot is filled
   * by a live suggestion call; if that fails the palette still opens with the
   * static question buttons only.
   */
  async openPaletteForHighlight(
    nodeId: string,
    start: number,
    end: number,
    selection: string,
    anchorEl?: HTMLElement,
  ): Promise<void> {
    if (this.pendingExpansion || !selection.trim()) {
      return;
    }
    let suggested: string | null = null;
    try {
      const sentence = this.sentenceContaining(nodeId, start);
      const response = await this.api.suggestQuestion(this.paperId, selection, sentence);
      suggested = response.question;
    } catch {
      suggested = null;
    }
    this.palette.openFor({ nodeId, start, end, selection, suggested }, anchorEl);
  }

  private sentenceContaining(nodeId: string, start: number): string | undefined {
    if (nodeId !== ROOT_ID || !this.abstractPayload) {
      return undefined;
    }
    const index = this.abstractView.sentenceIndexForOffset(start);
    return this.abstractPayload.sentences[index];
  }

  async ask(
    target: PaletteTarget,
    kind: QuestionKind,
    customQuestion?: string,
  ): Promise<void> {
    if (this.pendingExpansion) {
      return;
    }
    this.pendingExpansion = true;
    this.palette.setDisabled(true);
    const body: ExpandRequestBody = {
      anchor: { node_id: target.nodeId, start: target.start, end: target.end },
      kind,
    };
    if (kind === "custom") {
      body.custom_question = customQuestion ?? target.suggested ?? target.selection;
    }
    try {
      const result = await this.api.expand(this.paperId, this.treeId, body);
      if (result.kind === "no_answer") {
        this.toasts.show("No answer was found in this paper.", "no_answer");
        return;
      }
      this.state.apply(result.node);
      this.mountNode(result.node, { fresh: true });
    } catch (err) {
      if (err instanceof BackendError && err.code === "depth_exceeded") {
        this.showDepthNotice(target.nodeId, target.start);
      } else if (err instanceof BackendError) {
        this.toasts.show(`Expansion failed (${err.code}).`, "error");
      } else {
        this.toasts.show("Expansion failed.", "error");
        throw err;
      }
    } finally {
      this.pendingExpansion = false;
      this.palette.setDisabled(false);
      this.palette.close();
    }
  }

  private showDepthNotice(parentId: string, start: number): void {
    const thread = this.threadFor(parentId, start);
    thread?.append(
      el("div", {
        class: "notice depth-notice",
        text: "Maximum expansion depth reached for this thread.",
      }),
    );
  }

  private threadFor(parentId: string, anchorStart: number): HTMLElement | null {
    if (parentId === ROOT_ID) {
      const index = this.abstractView.sentenceIndexForOffset(anchorStart);
      return this.abstractView.threadForSentence(index);
    }
    return this.blocks.get(parentId)?.thread ?? null;
  }

  private mountNode(node: ExpansionNode, opts: { fresh: boolean }): void {
    if (node.parent === null || node.anchor === null) {
      return; // only the root lacks a parent anchor, and it is never mounted
    }
    const block = new ExpansionBlock(node, {
      onToggleCollapse: (nodeId) => {
        void this.toggleCollapse(nodeId);
      },
      onQuote: (nodeId) => {
        void this.quote(nodeId);
      },
      onHide: (nodeId) => {
        void this.hide(nodeId);
      },
    });
    this.blocks.set(node.id, block);
    block.renderAnswer(this.state);
    const thread = this.threadFor(node.parent, node.anchor.start);
    thread?.append(block.element);
    if (opts.fresh) {
      block.startFreshFade();
    }
    this.refreshDisplay(node.parent);
  }

  /** Re-render the parent's text so the node's anchor picks up expanded styling. */
  private refreshDisplay(nodeId: string): void {
    if (nodeId === ROOT_ID) {
      this.abstractView.rebuildAllSentences(this.state);
    } else {
      this.blocks.get(nodeId)?.renderAnswer(this.state);
    }
  }

  async toggleCollapse(nodeId: string): Promise<void> {
    const node = this.state.get(nodeId);
    if (!node) {
      return;
    }
    try {
      const updated = await this.api.setCollapsed(nodeId, !node.collapsed);
      this.state.apply(updated);
      this.blocks.get(nodeId)?.setCollapsed(updated.collapsed);
    } catch (err) {
      if (err instanceof BackendError) {
        this.toasts.show(`Could not update expansion (${err.code}).`, "error");
        return;
      }
      throw err;
    }
  }

  async hide(nodeId: string): Promise<void> {
    const node = this.state.get(nodeId);
    if (!node || nodeId === ROOT_ID) {
      return;
    }
    try {
      await this.api.deleteNode(nodeId);
    } catch (err) {
      if (err instanceof BackendError) {
        this.toasts.show(`Could not hide expansion (${err.code}).`, "error");
        return;
      }
      throw err;
    }
    const removed = this.state.removeSubtree(nodeId);
    for (const id of removed) {
      this.blocks.get(id)?.dispose();
      this.blocks.delete(id);
    }
    this.refreshDisplay(node.parent ?? ROOT_ID);
  }

  async quote(nodeId: string): Promise<void> {
    try {
      const payload = await this.api.attribution(nodeId);
      this.sourceView.learnParagraph(
        payload.paragraph_ref.paragraph_index,
        payload.paragraph_text,
        payload.source_locator.section,
      );
      this.attributionCard.show(payload);
    } catch (err) {
      if (err instanceof BackendError) {
        this.attributionCard.show(null);
        return;
      }
      throw err;
    }
  }
}

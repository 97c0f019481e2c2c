import type { AnchorRef, ExpansionNode, ExpansionTreePayload } from "./types";

export const ROOT_ID = "root";

/**
 * Client-side mirror of the server's expansion tree. The server owns the
 * tree; this mirror is rebuilt from GET tree on load and patched from the
 * node payloads returned by each mutation, never invented locally.
 */
export class TreeState {
  private nodes = new Map<string, ExpansionNode>();
  private order: string[] = [];

  static fromPayload(payload: ExpansionTreePayload): TreeState {
    const state = new TreeState();
    state.reset(payload);
    return state;
  }

  /** Replace all local state with a freshly fetched tree payload. */
  reset(payload: ExpansionTreePayload): void {
    this.nodes.clear();
    this.order = [];
    for (const node of payload.nodes) {
      this.apply(node);
    }
  }

  apply(node: ExpansionNode): void {
    if (!this.nodes.has(node.id)) {
      this.order.push(node.id);
    }
    this.nodes.set(node.id, node);
  }

  get(id: string): ExpansionNode | undefined {
    return this.nodes.get(id);
  }

  has(id: string): boolean {
    return this.nodes.has(id);
  }

  root(): ExpansionNode | undefined {
    return this.nodes.get(ROOT_ID);
  }

  /** Nodes in creation order, the order the server serializes them in. */
  all(): ExpansionNode[] {
    return this.order.map((id) => this.nodes.get(id)!).filter(Boolean);
  }

  childrenOf(id: string): ExpansionNode[] {
    return this.all().filter((n) => n.parent === id);
  }

  /** The ids of a node and every descendant, in creation order. */
  subtreeIds(id: string): string[] {
    const doomed = new Set([id]);
    for (const node of this.all()) {
      if (node.parent !== null && doomed.has(node.parent)) {
        doomed.add(node.id);
      }
    }
    return this.order.filter((n) => doomed.has(n));
  }

  removeSubtree(id: string): string[] {
    const removed = this.subtreeIds(id);
    for (const nodeId of removed) {
      this.nodes.delete(nodeId);
    }
    this.order = this.order.filter((n) => this.nodes.has(n));
    return removed;
  }

  /** Anchor spans on `nodeId` that currently have at least one expansion. */
  expandedSpansOf(nodeId: string): AnchorRef[] {
    return this.childrenOf(nodeId)
      .map((n) => n.anchor)
      .filter((a): a is AnchorRef => a !== null);
  }

  /** True when some expansion is anchored exactly on [start, end) of nodeId. */
  isSpanExpanded(nodeId: string, start: number, end: number): boolean {
    return this.expandedSpansOf(nodeId).some((a) => a.start === start && a.end === end);
  }

  size(): number {
    return this.nodes.size;
  }
}

import { afterEach, describe, expect, it } from "vitest";
import type { FetchLike } from "../src/api";
import { ExpandocApp } from "../src/app";
import { ROOT_ID } from "../src/state";
import type { AbstractPayload, ExpansionNode } from "../src/types";

const ABSTRACT = "Alpha beta gamma. Delta epsilon zeta.";

const abstractPayload: AbstractPayload = {
  paper_id: "p1",
  title: "A Paper",
  abstract: ABSTRACT,
  sentences: ["Alpha beta gamma.", "Delta epsilon zeta."],
  entities: [
    { anchor: "beta", start: 6, end: 10, suggested_question: "What is beta?", verified: true },
  ],
};

const rootNode: ExpansionNode = {
  id: ROOT_ID,
  parent: null,
  anchor: null,
  kind: null,
  question: null,
  answer: ABSTRACT,
  attribution: null,
  collapsed: false,
  depth: 0,
};

function node(id: string, parent: string, start: number, end: number, depth: number): ExpansionNode {
  return {
    id,
    parent,
    anchor: { node_id: parent, start, end },
    kind: "define",
    question: `What is ${id}?`,
    answer: `Answer text for ${id} with several words.`,
    attribution: { paragraph_index: 1, score: 0.9, section: null, text: "para" },
    collapsed: false,
    depth,
  };
}

const json = (status: number, body: unknown) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });

interface Router {
  abstract?: () => Promise<Response> | Response;
  tree?: () => Promise<Response> | Response;
  suggest?: () => Promise<Response> | Response;
  expand?: (body: unknown) => Promise<Response> | Response;
  attribution?: () => Promise<Response> | Response;
  patch?: (body: unknown) => Promise<Response> | Response;
  del?: () => Promise<Response> | Response;
}

/** Scriptable stand-in for the service; counts hits per route family. */
function stubFetch(router: Router): { fetchFn: FetchLike; hits: Record<string, number> } {
  const hits: Record<string, number> = {};
  const bump = (key: string) => {
    hits[key] = (hits[key] ?? 0) + 1;
  };
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(url).pathname;
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    if (method === "GET" && path.endsWith("/abstract")) {
      bump("abstract");
      return router.abstract?.() ?? json(200, abstractPayload);
    }
    if (method === "GET" && /\/trees\/[^/]+$/.test(path)) {
      bump("tree");
      return (
        router.tree?.() ??
        json(200, { tree_id: "t", paper_id: "p1", next_ordinal: 1, nodes: [rootNode] })
      );
    }
    if (method === "POST" && path.endsWith("/suggestions")) {
      bump("suggest");
      return router.suggest?.() ?? json(200, { question: "Suggested?" });
    }
    if (method === "POST" && path.endsWith("/expansions")) {
      bump("expand");
      if (!router.expand) {
        throw new Error("no expand route scripted");
      }
      return router.expand(body);
    }
    if (method === "GET" && path.endsWith("/attribution")) {
      bump("attribution");
      if (!router.attribution) {
        throw new Error("no attribution route scripted");
      }
      return router.attribution();
    }
    if (method === "PATCH") {
      bump("patch");
      if (!router.patch) {
        throw new Error("no patch route scripted");
      }
      return router.patch(body);
    }
    if (method === "DELETE") {
      bump("delete");
      return router.del?.() ?? new Response(null, { status: 204 });
    }
    throw new Error(`unexpected request: ${method} ${path}`);
  };
  return { fetchFn, hits };
}

function makeApp(router: Router, variant: "base" | "refined" = "base") {
  const host = document.createElement("div");
  document.body.append(host);
  const { fetchFn, hits } = stubFetch(router);
  const app = new ExpandocApp(host, {
    baseUrl: "http://svc.test",
    paperId: "p1",
    treeId: "t",
    variant,
    fetchFn,
  });
  return { app, host, hits };
}

async function waitFor(cond: () => boolean, ms = 5_000): Promise<void> {
  const deadline = Date.now() + ms;
  while (!cond()) {
    if (Date.now() > deadline) {
      throw new Error("condition not met in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

afterEach(() => {
  document.body.innerHTML = "";
});

describe("ExpandocApp", () => {
  it("mounts expansions under the sentence they anchor in", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const { app, host } = makeApp({ expand: () => json(201, n1) });
    await app.load();

    (host.querySelector('.entity[data-gstart="6"]') as HTMLElement).click();
    (app.palette.element.querySelector(".palette-define") as HTMLElement).click();
    await waitFor(() => app.state.size() === 2 && !app.isPending);

    const block = host.querySelector(
      '[data-thread-for-sentence="0"] [data-node-id="n1"]',
    );
    expect(block).not.toBeNull();
    const beta = host.querySelector('[data-gstart="6"]') as HTMLElement;
    expect(beta.classList.contains("anchor-expanded")).toBe(true);
    const answer = block!.querySelector(".expansion-answer") as HTMLElement;
    expect(answer.classList.contains("fresh")).toBe(true);
  });

  it("nests a child expansion inside its parent's thread", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const n2 = node("n2", "n1", 0, 6, 2);
    const nodes = [n1, n2];
    const { app, host } = makeApp({ expand: () => json(201, nodes.shift()!) });
    await app.load();

    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );
    await app.ask(
      { nodeId: "n1", start: 0, end: 6, selection: "Answer", suggested: null },
      "define",
    );

    expect(
      host.querySelector('[data-thread-of="n1"] [data-node-id="n2"]'),
    ).not.toBeNull();
    const childAnchor = host.querySelector(
      '[data-display-of="n1"] .anchor-expanded',
    ) as HTMLElement;
    expect(childAnchor.textContent).toBe(n1.answer.slice(0, 6));
  });

  it("allows only one expansion in flight per tree", async () => {
    let release!: (response: Response) => void;
    const gate = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const { app, host, hits } = makeApp({ expand: () => gate });
    await app.load();

    (host.querySelector('.entity[data-gstart="6"]') as HTMLElement).click();
    (app.palette.element.querySelector(".palette-define") as HTMLElement).click();
    expect(app.isPending).toBe(true);
    expect(app.palette.element.classList.contains("palette-disabled")).toBe(true);

    // a second ask while pending must be ignored outright
    await app.ask(
      { nodeId: ROOT_ID, start: 0, end: 5, selection: "Alpha", suggested: null },
      "expand",
    );
    expect(hits.expand).toBe(1);

    release(json(201, node("n1", ROOT_ID, 6, 10, 1)));
    await waitFor(() => !app.isPending);
    expect(app.state.size()).toBe(2);
    expect(hits.expand).toBe(1);
  });

  it("shows an inline notice when recursion depth is exhausted", async () => {
    const { app, host } = makeApp({
      expand: () =>
        json(429, { code: "depth_exceeded", message: "too deep", retryable: false }),
    });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );
    const notice = host.querySelector('[data-thread-for-sentence="0"] .depth-notice');
    expect(notice).not.toBeNull();
    expect(notice?.textContent).toMatch(/depth/i);
    expect(host.querySelector(".toast-error")).toBeNull();
    expect(app.state.size()).toBe(1);
  });

  it("surfaces other backend failures as an error toast", async () => {
    const { app, host } = makeApp({
      expand: () =>
        json(503, { code: "provider_unavailable", message: "down", retryable: true }),
    });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );
    const toast = host.querySelector(".toast-error");
    expect(toast?.textContent).toContain("provider_unavailable");
    expect(app.state.size()).toBe(1);
  });

  it("opens a static palette when the suggestion call fails", async () => {
    const { app } = makeApp({
      suggest: () => {
        throw new Error("connection refused");
      },
    });
    await app.load();
    await app.openPaletteForHighlight(ROOT_ID, 0, 5, "Alpha");
    expect(app.palette.isOpen).toBe(true);
    expect(app.palette.element.querySelector(".palette-ask-suggested")).toBeNull();
    expect(app.palette.element.querySelector(".palette-define")).not.toBeNull();
  });

  it("fills the suggested slot from the live suggestion endpoint", async () => {
    const { app, hits } = makeApp({});
    await app.load();
    await app.openPaletteForHighlight(ROOT_ID, 0, 5, "Alpha");
    expect(hits.suggest).toBe(1);
    const suggested = app.palette.element.querySelector(".palette-ask-suggested");
    expect(suggested?.textContent).toBe("Suggested?");
  });

  it("hide removes the subtree from state and DOM", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const n2 = node("n2", "n1", 0, 6, 2);
    const nodes = [n1, n2];
    const { app, host } = makeApp({ expand: () => json(201, nodes.shift()!) });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );
    await app.ask(
      { nodeId: "n1", start: 0, end: 6, selection: "Answer", suggested: null },
      "define",
    );

    (host.querySelector('[data-node-id="n1"] .hide-button') as HTMLElement).click();
    await waitFor(() => app.state.size() === 1);
    expect(host.querySelector('[data-node-id="n1"]')).toBeNull();
    expect(host.querySelector('[data-node-id="n2"]')).toBeNull();
    const beta = host.querySelector('[data-gstart="6"]') as HTMLElement;
    expect(beta.classList.contains("anchor-expanded")).toBe(false);
  });

  it("collapse state follows the PATCH response", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const { app, host } = makeApp({
      expand: () => json(201, n1),
      patch: (body) =>
        json(200, { ...n1, collapsed: (body as { collapsed: boolean }).collapsed }),
    });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );

    (host.querySelector('[data-node-id="n1"] .question-tag') as HTMLElement).click();
    await waitFor(() => app.state.get("n1")?.collapsed === true);
    const block = host.querySelector('[data-node-id="n1"]') as HTMLElement;
    expect(block.classList.contains("collapsed")).toBe(true);
  });

  it("reports a processing paper instead of rendering", async () => {
    const { app, host, hits } = makeApp({
      abstract: () =>
        json(409, {
          code: "validation_failed",
          message: "paper is still processing",
          retryable: true,
        }),
    });
    await app.load();
    expect(host.querySelector(".app-status")?.textContent).toMatch(/processed/i);
    expect(hits.tree).toBeUndefined();
  });

  it("attribution flows into the card and the source view", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const attribution = {
      paragraph_text: "The spindle applies a calibrated torque.",
      paragraph_ref: { paper_id: "p1", paragraph_index: 3 },
      score: 0.91,
      source_locator: {
        paper_id: "p1",
        paragraph_index: 3,
        section: "Methods",
        page: null,
        source_uri: "https://example.test/p1.pdf",
      },
    };
    const { app, host } = makeApp({
      expand: () => json(201, n1),
      attribution: () => json(200, attribution),
    });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );

    (host.querySelector('[data-node-id="n1"] .quote-button') as HTMLElement).click();
    await waitFor(() => !app.attributionCard.element.hasAttribute("hidden"));
    expect(
      app.attributionCard.element.querySelector(".attribution-text")?.textContent,
    ).toBe(attribution.paragraph_text);

    (app.attributionCard.element.querySelector(".open-source") as HTMLElement).click();
    const para = app.sourceView.element.querySelector(
      '[data-paragraph-index="3"]',
    ) as HTMLElement;
    expect(para.classList.contains("source-highlight")).toBe(true);
    expect(para.textContent).toContain(attribution.paragraph_text);
  });

  it("attribution errors degrade to the empty-card message", async () => {
    const n1 = node("n1", ROOT_ID, 6, 10, 1);
    const { app, host } = makeApp({
      expand: () => json(201, n1),
      attribution: () =>
        json(404, { code: "not_found", message: "no attribution", retryable: false }),
    });
    await app.load();
    await app.ask(
      { nodeId: ROOT_ID, start: 6, end: 10, selection: "beta", suggested: null },
      "define",
    );
    (host.querySelector('[data-node-id="n1"] .quote-button') as HTMLElement).click();
    await waitFor(() => !app.attributionCard.element.hasAttribute("hidden"));
    expect(app.attributionCard.element.querySelector(".attribution-empty")).not.toBeNull();
  });
});

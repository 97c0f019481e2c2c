import type {
  AbstractPayload,
  ApiErrorBody,
  AttributionPayload,
  ExpandRequestBody,
  ExpandResult,
  ExpansionNode,
  ExpansionTreePayload,
  PaperListPage,
  PaperStatus,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A coded backend error, carrying the structured body when one was sent. */
export class BackendError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.name = "BackendError";
    this.status = status;
    this.body = body;
  }

  get code() {
    return this.body.code;
  }

  get retryable() {
    return this.body.retryable;
  }
}

async function readError(status: number, response: Response): Promise<BackendError> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "provider_unavailable", message: `HTTP ${status}`, retryable: true };
  }
  return new BackendError(status, body);
}

/**
 * Thin typed client over the documented HTTP surface. Every method maps to
 * exactly one route; nothing else is ever requested.
 */
export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (response.status === 204) {
      return undefined as T;
    }
    if (!response.ok) {
      throw await readError(response.status, response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  /** Submit a canonical-JSON document; ingestion completes asynchronously. */
  ingestCanonical(document: unknown): Promise<{ paper_id: string; status: string }> {
    return this.request("POST", "/papers", document);
  }

  listPapers(query = "", page = 1, pageSize = 20): Promise<PaperListPage> {
    const params = new URLSearchParams({
      query,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.request("GET", `/papers?${params}`);
  }

  paperStatus(paperId: string): Promise<PaperStatus> {
    return this.request("GET", `/papers/${encodeURIComponent(paperId)}`);
  }

  abstract(paperId: string): Promise<AbstractPayload> {
    return this.request("GET", `/papers/${encodeURIComponent(paperId)}/abstract`);
  }

  suggestQuestion(
    paperId: string,
    selection: string,
    sentence?: string,
  ): Promise<{ question: string }> {
    return this.request("POST", `/papers/${encodeURIComponent(paperId)}/suggestions`, {
      selection,
      sentence: sentence ?? null,
    });
  }

  tree(paperId: string, treeId: string): Promise<ExpansionTreePayload> {
    return this.request(
      "GET",
      `/papers/${encodeURIComponent(paperId)}/trees/${encodeURIComponent(treeId)}`,
    );
  }

  /**
   * Create one expansion. A refusal is a domain outcome (HTTP 200 with a
   * no_answer code), not an exception, so callers can toast it.
   */
  async expand(
    paperId: string,
    treeId: string,
    body: ExpandRequestBody,
  ): Promise<ExpandResult> {
    const path =
      `/papers/${encodeURIComponent(paperId)}` +
      `/trees/${encodeURIComponent(treeId)}/expansions`;
    const response = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.status === 201) {
      return { kind: "node", node: (await response.json()) as ExpansionNode };
    }
    if (response.status === 200) {
      return { kind: "no_answer", error: (await response.json()) as ApiErrorBody };
    }
    throw await readError(response.status, response);
  }

  attribution(nodeId: string): Promise<AttributionPayload> {
    return this.request("GET", `/expansions/${encodeURIComponent(nodeId)}/attribution`);
  }

  setCollapsed(nodeId: string, collapsed: boolean): Promise<ExpansionNode> {
    return this.request("PATCH", `/expansions/${encodeURIComponent(nodeId)}`, { collapsed });
  }

  deleteNode(nodeId: string): Promise<void> {
    return this.request("DELETE", `/expansions/${encodeURIComponent(nodeId)}`);
  }
}

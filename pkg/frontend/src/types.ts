/** Wire types mirroring the backend's published JSON schemas. */

export type QuestionKind = "define" | "expand" | "why" | "custom";

export type PaletteVariant = "base" | "refined";

export interface ExpandableEntity {
  anchor: string;
  start: number;
  end: number;
  suggested_question: string | null;
  verified: boolean;
}

export interface AbstractPayload {
  paper_id: string;
  title: string;
  abstract: string;
  sentences: string[];
  entities: ExpandableEntity[];
}

export interface AnchorRef {
  node_id: string;
  start: number;
  end: number;
}

export interface NodeAttribution {
  paragraph_index: number;
  score: number;
  section: string | null;
  text: string;
}

export interface ExpansionNode {
  id: string;
  parent: string | null;
  anchor: AnchorRef | null;
  kind: QuestionKind | null;
  question: string | null;
  answer: string;
  attribution: NodeAttribution | null;
  collapsed: boolean;
  depth: number;
  tree_id?: string;
}

export interface ExpansionTreePayload {
  tree_id: string;
  paper_id: string;
  next_ordinal: number;
  nodes: ExpansionNode[];
}

export interface ParagraphRef {
  paper_id: string;
  paragraph_index: number;
}

export interface SourceLocator {
  paper_id: string;
  paragraph_index: number;
  section: string | null;
  page: number | null;
  source_uri: string | null;
}

export interface AttributionPayload {
  paragraph_text: string;
  paragraph_ref: ParagraphRef;
  score: number;
  source_locator: SourceLocator;
}

export interface PaperStatus {
  paper_id: string;
  status: "processing" | "ready" | "failed";
  error?: string | null;
  stats?: Record<string, number>;
}

export interface PaperListPage {
  items: PaperSummary[];
  page: number;
  page_size: number;
  total: number;
}

export interface PaperSummary {
  paper_id: string;
  title: string;
  authors: string[];
  venue: string | null;
  year: number | null;
}

export type ApiErrorCode =
  | "not_found"
  | "invalid_anchor"
  | "no_answer"
  | "provider_unavailable"
  | "validation_failed"
  | "depth_exceeded";

export interface ApiErrorBody {
  code: ApiErrorCode;
  message: string;
  retryable: boolean;
}

export interface ExpandRequestBody {
  anchor: AnchorRef;
  kind: QuestionKind;
  custom_question?: string | null;
}

/** POST expansions resolves to a created node or a domain-level refusal. */
export type ExpandResult =
  | { kind: "node"; node: ExpansionNode }
  | { kind: "no_answer"; error: ApiErrorBody };

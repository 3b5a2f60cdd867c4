/** Wire types for the session API. Every number shown in the UI comes from
 * these documents; the client never scores or mines anything itself. */

export type Source = "db" | "generated";

export interface LayoutPoint {
  id: string;
  x: number;
  y: number;
  source: Source;
  level: number;
  representative: boolean;
  image_url: string;
}

export interface LayoutKeyword {
  term: string;
  x: number;
  y: number;
  level: number;
  cluster_id: number;
  image_ids: string[];
}

export interface LayoutDoc {
  session_id: string;
  levels: number;
  points: LayoutPoint[];
  keywords: LayoutKeyword[];
}

export interface HistogramDoc {
  lo: number;
  hi: number;
  counts: number[];
}

export interface RatingEntry {
  id: string;
  s_bar: number;
}

export interface EvaluateResponse {
  criterion: { a: string; b: string };
  ratings: RatingEntry[];
  histogram: HistogramDoc;
}

export interface SelectionKeyword {
  term: string;
  n: number;
  tfidf: number;
  normalized: number;
  cluster_id: number;
}

export interface IncidencePair {
  term: string;
  record_id: string;
}

export interface PromptSpan {
  term: string;
  start: number;
  end: number;
}

export interface PromptDetail {
  id: string;
  prompt: string;
  spans: PromptSpan[];
}

export interface SelectionResponse {
  keywords: SelectionKeyword[];
  incidence: IncidencePair[];
  guidance_histogram: HistogramDoc;
  prompts: PromptDetail[];
}

export interface SessionRequest {
  prompt: string;
  gs_min: number;
  gs_max: number;
  n_generate: number;
  k_retrieve: number;
  seed?: number;
}

export interface CommonPair {
  a: string;
  b: string;
}

export type SessionStatus = "pending" | "ready" | "failed";

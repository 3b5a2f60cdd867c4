/** Local Exploration view models: the keyword-image incidence table
 * (BioFabric style: one row per keyword, one column per image, a mark per
 * co-occurrence), prompt text segmentation around keyword spans, and the
 * copy-keywords prompt edit. */

import type { PromptDetail, PromptSpan, SelectionResponse } from "./types.js";

export interface IncidenceMark {
  term: string;
  recordId: string;
  row: number;
  column: number;
}

export interface IncidenceModel {
  /** keyword terms in importance order (table rows) */
  rows: string[];
  /** selected record ids (table columns) */
  columns: string[];
  marks: IncidenceMark[];
}

export function buildIncidence(report: SelectionResponse): IncidenceModel {
  const rows = report.keywords.map((k) => k.term);
  const columns = report.prompts.map((p) => p.id);
  const rowIndex = new Map(rows.map((t, i) => [t, i]));
  const columnIndex = new Map(columns.map((id, i) => [id, i]));
  const marks: IncidenceMark[] = [];
  for (const pair of report.incidence) {
    const row = rowIndex.get(pair.term);
    const column = columnIndex.get(pair.record_id);
    if (row === undefined || column === undefined) continue;
    marks.push({ term: pair.term, recordId: pair.record_id, row, column });
  }
  return { rows, columns, marks };
}

/** Appending chosen keywords to the prompt: ", kw1, kw2". */
export function copyKeywords(prompt: string, keywords: readonly string[]): string {
  if (keywords.length === 0) return prompt;
  const suffix = keywords.join(", ");
  return prompt.trim() === "" ? suffix : `${prompt}, ${suffix}`;
}

export interface Segment {
  text: string;
  highlighted: boolean;
  terms: string[];
}

/** Split a prompt into plain and highlighted segments; overlapping spans
 * merge into one highlighted run carrying every contributing term. */
export function segmentPrompt(detail: PromptDetail): Segment[] {
  const spans = [...detail.spans].sort((a, b) => a.start - b.start || a.end - b.end);
  const merged: { start: number; end: number; terms: string[] }[] = [];
  for (const span of spans) {
    const last = merged[merged.length - 1];
    if (last && span.start <= last.end) {
      last.end = Math.max(last.end, span.end);
      if (!last.terms.includes(span.term)) last.terms.push(span.term);
    } else {
      merged.push({ start: span.start, end: span.end, terms: [span.term] });
    }
  }
  const segments: Segment[] = [];
  let cursor = 0;
  for (const run of merged) {
    if (run.start > cursor) {
      segments.push({ text: detail.prompt.slice(cursor, run.start), highlighted: false, terms: [] });
    }
    segments.push({
      text: detail.prompt.slice(run.start, run.end),
      highlighted: true,
      terms: run.terms,
    });
    cursor = run.end;
  }
  if (cursor < detail.prompt.length) {
    segments.push({ text: detail.prompt.slice(cursor), highlighted: false, terms: [] });
  }
  return segments;
}

export function spansOfTerm(detail: PromptDetail, term: string): PromptSpan[] {
  return detail.spans.filter((s) => s.term === term);
}

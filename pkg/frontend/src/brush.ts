/** Evaluation-histogram brushing. Ratings are fetched once per criterion;
 * dragging the brush recomputes the hidden set client-side, no re-rating. */

import type { HistogramDoc, RatingEntry } from "./types.js";

export function clampRange(lo: number, hi: number): [number, number] {
  const a = Math.max(0, Math.min(1, Math.min(lo, hi)));
  const b = Math.max(0, Math.min(1, Math.max(lo, hi)));
  return [a, b];
}

/** Ids whose rating falls outside [lo, hi]; these get hidden. */
export function hiddenIdsOutsideRange(
  ratings: readonly RatingEntry[],
  lo: number,
  hi: number,
): Set<string> {
  const [a, b] = clampRange(lo, hi);
  const hidden = new Set<string>();
  for (const r of ratings) {
    if (r.s_bar < a || r.s_bar > b) hidden.add(r.id);
  }
  return hidden;
}

export interface Bar {
  x: number;
  y: number;
  width: number;
  height: number;
  binLo: number;
  binHi: number;
  count: number;
}

/** Bar geometry for an SVG of the given size; zero-count bins get zero
 * height, a degenerate histogram range renders a single full-width bar. */
export function histogramBars(hist: HistogramDoc, width: number, height: number): Bar[] {
  const bins = hist.counts.length;
  if (bins === 0) return [];
  const peak = Math.max(1, ...hist.counts);
  const span = hist.hi - hist.lo;
  const barWidth = width / bins;
  return hist.counts.map((count, i) => {
    const h = (count / peak) * height;
    return {
      x: i * barWidth,
      y: height - h,
      width: barWidth,
      height: h,
      binLo: span === 0 ? hist.lo : hist.lo + (i / bins) * span,
      binHi: span === 0 ? hist.hi : hist.lo + ((i + 1) / bins) * span,
      count,
    };
  });
}

/** Map a pixel x-interval on the histogram back to a value range. */
export function pixelsToRange(
  hist: HistogramDoc,
  width: number,
  x0: number,
  x1: number,
): [number, number] {
  const span = hist.hi - hist.lo;
  const lo = hist.lo + (Math.min(x0, x1) / width) * span;
  const hi = hist.lo + (Math.max(x0, x1) / width) * span;
  return [lo, hi];
}

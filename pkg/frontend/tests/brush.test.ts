import { describe, expect, it } from "vitest";

import { clampRange, hiddenIdsOutsideRange, histogramBars, pixelsToRange } from "../src/brush.js";
import type { RatingEntry } from "../src/types.js";

const ratings: RatingEntry[] = [
  { id: "a", s_bar: 0.1 },
  { id: "b", s_bar: 0.45 },
  { id: "c", s_bar: 0.6 },
  { id: "d", s_bar: 0.9 },
  { id: "e", s_bar: 0.95 },
];

describe("hiddenIdsOutsideRange", () => {
  it("full range hides nothing", () => {
    expect(hiddenIdsOutsideRange(ratings, 0, 1).size).toBe(0);
  });

  it("hides exactly the ids outside the range, inclusive bounds", () => {
    const hidden = hiddenIdsOutsideRange(ratings, 0.6, 0.9);
    expect([...hidden].sort()).toEqual(["a", "b", "e"]);
  });

  it("empty intersection hides everything", () => {
    expect(hiddenIdsOutsideRange(ratings, 0.99, 1).size).toBe(5);
  });

  it("widening the brush only unhides (monotone)", () => {
    let previous = hiddenIdsOutsideRange(ratings, 0.5, 0.5);
    for (const widen of [0.1, 0.2, 0.3, 0.4, 0.5]) {
      const next = hiddenIdsOutsideRange(ratings, 0.5 - widen, 0.5 + widen);
      for (const id of next) expect(previous.has(id)).toBe(true);
      previous = next;
    }
  });

  it("clamps reversed and out-of-bound ranges", () => {
    expect(clampRange(0.9, 0.2)).toEqual([0.2, 0.9]);
    expect(clampRange(-1, 2)).toEqual([0, 1]);
  });
});

describe("histogram geometry", () => {
  const hist = { lo: 0, hi: 1, counts: [2, 0, 6, 2] };

  it("bars span the width and scale to the peak", () => {
    const bars = histogramBars(hist, 400, 100);
    expect(bars).toHaveLength(4);
    expect(bars[0]!.width).toBeCloseTo(100);
    expect(bars[2]!.height).toBeCloseTo(100);
    expect(bars[0]!.height).toBeCloseTo(100 / 3);
    expect(bars[1]!.height).toBe(0);
    expect(bars[3]!.binLo).toBeCloseTo(0.75);
    expect(bars[3]!.binHi).toBeCloseTo(1.0);
  });

  it("degenerate value range still renders", () => {
    const bars = histogramBars({ lo: 7.5, hi: 7.5, counts: [3] }, 100, 50);
    expect(bars).toHaveLength(1);
    expect(bars[0]!.height).toBe(50);
  });

  it("maps pixel intervals back to value ranges", () => {
    expect(pixelsToRange(hist, 400, 100, 300)).toEqual([0.25, 0.75]);
    expect(pixelsToRange(hist, 400, 300, 100)).toEqual([0.25, 0.75]);
  });
});

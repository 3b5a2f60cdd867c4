import { describe, expect, it } from "vitest";

import { levelForScale, panCamera, toggleSelection, zoomCamera } from "../src/viewstate.js";

describe("levelForScale", () => {
  it("each doubling reveals one more level, clamped to the range", () => {
    expect(levelForScale(1, 4)).toBe(0);
    expect(levelForScale(1.9, 4)).toBe(0);
    expect(levelForScale(2, 4)).toBe(1);
    expect(levelForScale(4, 4)).toBe(2);
    expect(levelForScale(8, 4)).toBe(3);
    expect(levelForScale(64, 4)).toBe(3);
    expect(levelForScale(0.25, 4)).toBe(0);
    expect(levelForScale(0, 4)).toBe(0);
  });
});

describe("toggleSelection", () => {
  const known = new Set(["a", "b"]);

  it("adds and removes known ids", () => {
    expect(toggleSelection([], "a", known)).toEqual(["a"]);
    expect(toggleSelection(["a"], "a", known)).toEqual([]);
    expect(toggleSelection(["a"], "b", known)).toEqual(["a", "b"]);
  });

  it("selection stays a subset of the session's record ids", () => {
    expect(toggleSelection([], "ghost", known)).toEqual([]);
  });
});

describe("camera", () => {
  it("pan and zoom are pure (fresh objects, inputs untouched)", () => {
    const camera = { x: 1, y: 2, scale: 2 };
    const panned = panCamera(camera, 3, 4);
    expect(panned).toEqual({ x: 4, y: 6, scale: 2 });
    expect(camera).toEqual({ x: 1, y: 2, scale: 2 });
    const zoomed = zoomCamera(camera, 2, 0, 0);
    expect(zoomed.scale).toBe(4);
    expect(camera.scale).toBe(2);
  });

  it("zoom clamps to sane bounds", () => {
    const camera = { x: 0, y: 0, scale: 1 };
    expect(zoomCamera(camera, 1e-9, 0, 0).scale).toBeCloseTo(0.05);
    expect(zoomCamera(camera, 1e9, 0, 0).scale).toBe(64);
  });
});

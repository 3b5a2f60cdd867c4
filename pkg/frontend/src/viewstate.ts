/** Client-side view state. The camera is pure presentation: viewport
 * transforms never touch the layout coordinates coming from the server. */

export interface Camera {
  x: number;
  y: number;
  scale: number;
}

export interface ViewState {
  sessionId: string | null;
  zoomLevel: number;
  camera: Camera;
  showGenerated: boolean;
  showRetrieved: boolean;
  showKeywords: boolean;
  /** record ids hidden by the evaluation brush */
  hiddenIds: ReadonlySet<string>;
  /** record ids highlighted by clicking a keyword */
  highlightedIds: ReadonlySet<string>;
  selection: readonly string[];
}

export function initialViewState(): ViewState {
  return {
    sessionId: null,
    zoomLevel: 0,
    camera: { x: 0, y: 0, scale: 1 },
    showGenerated: true,
    showRetrieved: true,
    showKeywords: true,
    hiddenIds: new Set(),
    highlightedIds: new Set(),
    selection: [],
  };
}

/** Zoom thresholds: each doubling of the camera scale reveals one more
 * semantic level, matching the server's merge-distance halving. */
export function levelForScale(scale: number, levels: number): number {
  if (!(scale > 0)) return 0;
  const level = Math.floor(Math.log2(scale));
  return Math.max(0, Math.min(levels - 1, level));
}

/** Selection stays a subset of the session's record ids. */
export function toggleSelection(
  selection: readonly string[],
  id: string,
  knownIds: ReadonlySet<string>,
): string[] {
  if (!knownIds.has(id)) return [...selection];
  return selection.includes(id)
    ? selection.filter((s) => s !== id)
    : [...selection, id];
}

export function panCamera(camera: Camera, dx: number, dy: number): Camera {
  return { x: camera.x + dx, y: camera.y + dy, scale: camera.scale };
}

export function zoomCamera(camera: Camera, factor: number, cx: number, cy: number): Camera {
  const scale = Math.max(0.05, Math.min(64, camera.scale * factor));
  const applied = scale / camera.scale;
  return {
    x: cx - (cx - camera.x) * applied,
    y: cy - (cy - camera.y) * applied,
    scale,
  };
}

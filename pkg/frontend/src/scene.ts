/** Pure scene construction for the Image Browser view.
 *
 * At zoom level L, points and keywords whose level is at most L render as
 * images and labels; deeper ones render as translucent placeholder
 * rectangles. Brush-hidden points disappear entirely, visibility toggles
 * drop whole categories, and a clicked keyword's image_ids carry a
 * highlight flag. The DOM layer just paints these nodes.
 */

import type { LayoutDoc, LayoutKeyword, LayoutPoint, Source } from "./types.js";
import type { ViewState } from "./viewstate.js";

export interface ImageNode {
  kind: "image";
  id: string;
  x: number;
  y: number;
  url: string;
  source: Source;
  representative: boolean;
  highlighted: boolean;
  selected: boolean;
}

export interface PlaceholderNode {
  kind: "placeholder";
  id: string;
  x: number;
  y: number;
  source: Source;
  highlighted: boolean;
  selected: boolean;
}

export interface LabelNode {
  kind: "label";
  term: string;
  x: number;
  y: number;
  clusterId: number;
  imageIds: string[];
}

export interface KeywordPlaceholderNode {
  kind: "keyword-placeholder";
  term: string;
  x: number;
  y: number;
}

export type SceneNode = ImageNode | PlaceholderNode | LabelNode | KeywordPlaceholderNode;

function sourceVisible(source: Source, view: ViewState): boolean {
  return source === "generated" ? view.showGenerated : view.showRetrieved;
}

function pointNode(point: LayoutPoint, view: ViewState): SceneNode {
  const shared = {
    id: point.id,
    x: point.x,
    y: point.y,
    source: point.source,
    highlighted: view.highlightedIds.has(point.id),
    selected: view.selection.includes(point.id),
  };
  if (point.level <= view.zoomLevel) {
    return {
      kind: "image",
      url: point.image_url,
      representative: point.representative,
      ...shared,
    };
  }
  return { kind: "placeholder", ...shared };
}

function keywordNode(keyword: LayoutKeyword, view: ViewState): SceneNode {
  if (keyword.level <= view.zoomLevel) {
    return {
      kind: "label",
      term: keyword.term,
      x: keyword.x,
      y: keyword.y,
      clusterId: keyword.cluster_id,
      imageIds: [...keyword.image_ids],
    };
  }
  return { kind: "keyword-placeholder", term: keyword.term, x: keyword.x, y: keyword.y };
}

export function buildLayoutScene(doc: LayoutDoc, view: ViewState): SceneNode[] {
  const nodes: SceneNode[] = [];
  for (const point of doc.points) {
    if (view.hiddenIds.has(point.id)) continue;
    if (!sourceVisible(point.source, view)) continue;
    nodes.push(pointNode(point, view));
  }
  if (view.showKeywords) {
    for (const keyword of doc.keywords) {
      nodes.push(keywordNode(keyword, view));
    }
  }
  return nodes;
}

export function imagesRendered(nodes: SceneNode[]): ImageNode[] {
  return nodes.filter((n): n is ImageNode => n.kind === "image");
}

export function labelsRendered(nodes: SceneNode[]): LabelNode[] {
  return nodes.filter((n): n is LabelNode => n.kind === "label");
}

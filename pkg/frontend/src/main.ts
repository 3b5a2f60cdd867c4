/** Browser wiring for the four views: Model Input, Image Browser,
 * Image Evaluation, Local Exploration. All scoring comes from the API;
 * this file only paints scene/table models from the pure modules. */

import { ApiClient, ApiError } from "./api.js";
import { hiddenIdsOutsideRange, histogramBars, pixelsToRange } from "./brush.js";
import { buildLayoutScene } from "./scene.js";
import { buildIncidence, copyKeywords, segmentPrompt } from "./selection.js";
import type { EvaluateResponse, LayoutDoc, SelectionResponse } from "./types.js";
import {
  initialViewState,
  levelForScale,
  panCamera,
  toggleSelection,
  zoomCamera,
  type ViewState,
} from "./viewstate.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const api = new ApiClient("");

let view: ViewState = initialViewState();
let layoutDoc: LayoutDoc | null = null;
let evaluation: EvaluateResponse | null = null;
let brushRange: [number, number] = [0, 1];

function el<K extends keyof HTMLElementTagNameMap>(tag: K, cls?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function toast(message: string) {
  const box = byId<HTMLDivElement>("toasts");
  const note = el("div", "toast");
  note.textContent = message;
  box.appendChild(note);
  setTimeout(() => note.remove(), 6000);
}

function reportError(err: unknown) {
  if (err instanceof ApiError) toast(`${err.code}: ${err.message}`);
  else toast(String(err));
}

// ---- Image Browser -----------------------------------------------------

function layoutExtent(doc: LayoutDoc) {
  const xs = doc.points.map((p) => p.x);
  const ys = doc.points.map((p) => p.y);
  if (xs.length === 0) return { minX: 0, minY: 0, width: 1, height: 1, unit: 0.05 };
  const minX = Math.min(...xs);
  const minY = Math.min(...ys);
  const width = Math.max(...xs) - minX || 1;
  const height = Math.max(...ys) - minY || 1;
  return { minX, minY, width, height, unit: Math.max(width, height) / 18 };
}

function renderBrowser() {
  const svg = byId<HTMLElement>("browser-svg") as unknown as SVGSVGElement;
  svg.innerHTML = "";
  if (!layoutDoc) return;
  byId<HTMLSpanElement>("zoom-level").textContent =
    `level ${view.zoomLevel} / ${layoutDoc.levels - 1}`;

  const { minX, minY, width, height, unit } = layoutExtent(layoutDoc);
  const pad = unit * 2;
  svg.setAttribute("viewBox", `${minX - pad} ${minY - pad} ${width + 2 * pad} ${height + 2 * pad}`);

  const camera = document.createElementNS(SVG_NS, "g");
  camera.setAttribute(
    "transform",
    `translate(${view.camera.x} ${view.camera.y}) scale(${view.camera.scale})`,
  );
  camera.setAttribute("transform-origin", `${minX + width / 2} ${minY + height / 2}`);
  svg.appendChild(camera);

  const size = unit;
  for (const node of buildLayoutScene(layoutDoc, view)) {
    if (node.kind === "image") {
      const img = document.createElementNS(SVG_NS, "image");
      img.setAttribute("href", node.url);
      img.setAttribute("x", String(node.x - size / 2));
      img.setAttribute("y", String(node.y - size / 2));
      img.setAttribute("width", String(size));
      img.setAttribute("height", String(size));
      img.classList.add("point-image");
      if (node.representative) img.classList.add("representative");
      if (node.highlighted) img.classList.add("highlighted");
      if (node.selected) img.classList.add("selected");
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `${node.id} (${node.source})`;
      img.appendChild(title);
      img.addEventListener("click", () => {
        if (!layoutDoc) return;
        const known = new Set(layoutDoc.points.map((p) => p.id));
        view = { ...view, selection: toggleSelection(view.selection, node.id, known) };
        renderBrowser();
      });
      camera.appendChild(img);
    } else if (node.kind === "placeholder") {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(node.x - size / 4));
      rect.setAttribute("y", String(node.y - size / 4));
      rect.setAttribute("width", String(size / 2));
      rect.setAttribute("height", String(size / 2));
      rect.classList.add("point-placeholder");
      if (node.highlighted) rect.classList.add("highlighted");
      if (node.selected) rect.classList.add("selected");
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `${node.id} (${node.source})`;
      rect.appendChild(title);
      rect.addEventListener("click", () => {
        if (!layoutDoc) return;
        const known = new Set(layoutDoc.points.map((p) => p.id));
        view = { ...view, selection: toggleSelection(view.selection, node.id, known) };
        renderBrowser();
      });
      camera.appendChild(rect);
    } else if (node.kind === "label") {
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(node.x));
      text.setAttribute("y", String(node.y));
      text.setAttribute("font-size", String(size * 0.45));
      text.classList.add("keyword-label");
      text.textContent = node.term;
      text.addEventListener("click", () => {
        view = { ...view, highlightedIds: new Set(node.imageIds) };
        renderBrowser();
      });
      camera.appendChild(text);
    } else {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(node.x - size / 6));
      rect.setAttribute("y", String(node.y - size / 6));
      rect.setAttribute("width", String(size / 3));
      rect.setAttribute("height", String(size / 6));
      rect.classList.add("keyword-placeholder");
      camera.appendChild(rect);
    }
  }
}

function wireBrowserControls() {
  const svg = byId<HTMLElement>("browser-svg");
  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    if (!layoutDoc) return;
    const factor = ev.deltaY < 0 ? 1.25 : 0.8;
    view = { ...view, camera: zoomCamera(view.camera, factor, 0, 0) };
    view = { ...view, zoomLevel: levelForScale(view.camera.scale, layoutDoc.levels) };
    renderBrowser();
  });

  let dragging: { x: number; y: number } | null = null;
  svg.addEventListener("pointerdown", (ev) => {
    dragging = { x: ev.clientX, y: ev.clientY };
  });
  svg.addEventListener("pointermove", (ev) => {
    if (!dragging || !layoutDoc) return;
    const { width, unit } = layoutExtent(layoutDoc);
    const perPixel = (width + 4 * unit) / svg.clientWidth;
    view = {
      ...view,
      camera: panCamera(view.camera, (ev.clientX - dragging.x) * perPixel, (ev.clientY - dragging.y) * perPixel),
    };
    dragging = { x: ev.clientX, y: ev.clientY };
    renderBrowser();
  });
  svg.addEventListener("pointerup", () => (dragging = null));
  svg.addEventListener("pointerleave", () => (dragging = null));

  for (const key of ["generated", "retrieved", "keywords"] as const) {
    byId<HTMLInputElement>(`toggle-${key}`).addEventListener("change", (ev) => {
      const checked = (ev.target as HTMLInputElement).checked;
      if (key === "generated") view = { ...view, showGenerated: checked };
      if (key === "retrieved") view = { ...view, showRetrieved: checked };
      if (key === "keywords") view = { ...view, showKeywords: checked };
      renderBrowser();
    });
  }
  byId<HTMLButtonElement>("clear-highlight").addEventListener("click", () => {
    view = { ...view, highlightedIds: new Set() };
    renderBrowser();
  });
  byId<HTMLButtonElement>("explore-selection").addEventListener("click", () => {
    exploreSelection().catch(reportError);
  });
}

// ---- Model Input -------------------------------------------------------

async function submitModelInput() {
  const prompt = byId<HTMLTextAreaElement>("prompt-input").value;
  const body = {
    prompt,
    gs_min: Number(byId<HTMLInputElement>("gs-min").value),
    gs_max: Number(byId<HTMLInputElement>("gs-max").value),
    n_generate: Number(byId<HTMLInputElement>("n-generate").value),
    k_retrieve: Number(byId<HTMLInputElement>("k-retrieve").value),
    seed: Number(byId<HTMLInputElement>("seed").value),
  };
  const button = byId<HTMLButtonElement>("create-session");
  button.disabled = true;
  button.textContent = "creating...";
  try {
    const { session_id } = await api.createSession(body);
    await api.waitReady(session_id);
    layoutDoc = await api.layout(session_id);
    evaluation = null;
    brushRange = [0, 1];
    view = {
      ...initialViewState(),
      sessionId: session_id,
      zoomLevel: 0,
      showGenerated: true,
      showRetrieved: true,
      showKeywords: true,
    };
    byId<HTMLSpanElement>("session-label").textContent = session_id;
    renderBrowser();
    renderHistogram();
    byId<HTMLDivElement>("exploration").innerHTML =
      "<p class=\"hint\">select images, then press “explore selection”</p>";
  } finally {
    button.disabled = false;
    button.textContent = "generate & retrieve";
  }
}

// ---- Image Evaluation --------------------------------------------------

async function submitCriterion() {
  if (!view.sessionId) return toast("create a session first");
  const a = byId<HTMLInputElement>("keyword-a").value.trim();
  const b = byId<HTMLInputElement>("keyword-b").value.trim();
  if (!a) {
    byId<HTMLSpanElement>("criterion-error").textContent = "first keyword is required";
    return;
  }
  byId<HTMLSpanElement>("criterion-error").textContent = "";
  evaluation = await api.evaluate(view.sessionId, a, b || undefined);
  brushRange = [0, 1];
  applyBrush();
  renderHistogram();
}

function applyBrush() {
  if (!evaluation) return;
  view = {
    ...view,
    hiddenIds: hiddenIdsOutsideRange(evaluation.ratings, brushRange[0], brushRange[1]),
  };
  renderBrowser();
}

function renderHistogram() {
  const svg = byId<HTMLElement>("histogram-svg") as unknown as SVGSVGElement;
  svg.innerHTML = "";
  const label = byId<HTMLSpanElement>("brush-label");
  if (!evaluation) {
    label.textContent = "";
    return;
  }
  const width = 360;
  const height = 120;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  for (const bar of histogramBars(evaluation.histogram, width, height)) {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(bar.x + 1));
    rect.setAttribute("y", String(bar.y));
    rect.setAttribute("width", String(Math.max(1, bar.width - 2)));
    rect.setAttribute("height", String(bar.height));
    rect.classList.add("hist-bar");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `[${bar.binLo.toFixed(2)}, ${bar.binHi.toFixed(2)}): ${bar.count}`;
    rect.appendChild(title);
    svg.appendChild(rect);
  }
  const [lo, hi] = brushRange;
  const overlay = document.createElementNS(SVG_NS, "rect");
  overlay.setAttribute("x", String(lo * width));
  overlay.setAttribute("y", "0");
  overlay.setAttribute("width", String(Math.max(0, (hi - lo) * width)));
  overlay.setAttribute("height", String(height));
  overlay.classList.add("brush-overlay");
  svg.appendChild(overlay);
  label.textContent = `${evaluation.criterion.a}  ← ${lo.toFixed(2)} .. ${hi.toFixed(2)} →  ${evaluation.criterion.b} (hidden: ${view.hiddenIds.size})`;
}

function wireHistogramBrush() {
  const svg = byId<HTMLElement>("histogram-svg");
  let start: number | null = null;
  const width = 360;

  const toLocalX = (ev: PointerEvent) => {
    const rect = svg.getBoundingClientRect();
    return ((ev.clientX - rect.left) / rect.width) * width;
  };
  svg.addEventListener("pointerdown", (ev) => {
    if (!evaluation) return;
    start = toLocalX(ev);
  });
  svg.addEventListener("pointermove", (ev) => {
    if (start === null || !evaluation) return;
    const [lo, hi] = pixelsToRange(evaluation.histogram, width, start, toLocalX(ev));
    brushRange = [Math.max(0, lo), Math.min(1, hi)];
    applyBrush();
    renderHistogram();
  });
  const finish = () => (start = null);
  svg.addEventListener("pointerup", finish);
  svg.addEventListener("pointerleave", finish);
  byId<HTMLButtonElement>("clear-brush").addEventListener("click", () => {
    brushRange = [0, 1];
    applyBrush();
    renderHistogram();
  });
}

async function renderCommonPairs() {
  const box = byId<HTMLDivElement>("common-pairs");
  const pairs = await api.commonPairs();
  for (const pair of pairs) {
    const chip = el("button", "chip");
    chip.textContent = `${pair.a} / ${pair.b}`;
    chip.addEventListener("click", () => {
      byId<HTMLInputElement>("keyword-a").value = pair.a;
      byId<HTMLInputElement>("keyword-b").value = pair.b;
      submitCriterion().catch(reportError);
    });
    box.appendChild(chip);
  }
}

// ---- Local Exploration -------------------------------------------------

function renderSelectionReport(report: SelectionResponse) {
  const box = byId<HTMLDivElement>("exploration");
  box.innerHTML = "";
  if (report.prompts.length === 0) {
    box.textContent = "empty selection";
    return;
  }

  const details = el("div", "panel");
  details.appendChild(Object.assign(el("h3"), { textContent: "Result Details" }));
  for (const detail of report.prompts) {
    const row = el("div", "prompt-row");
    const idTag = el("span", "record-id");
    idTag.textContent = detail.id;
    row.appendChild(idTag);
    const text = el("span", "prompt-text");
    for (const segment of segmentPrompt(detail)) {
      const piece = el("span", segment.highlighted ? "kw-span" : "");
      piece.textContent = segment.text;
      if (segment.highlighted) piece.title = segment.terms.join(", ");
      text.appendChild(piece);
    }
    row.appendChild(text);
    details.appendChild(row);
  }
  box.appendChild(details);

  const keywords = el("div", "panel");
  keywords.appendChild(Object.assign(el("h3"), { textContent: "Prompt Keywords" }));
  const incidence = buildIncidence(report);
  const table = el("table", "incidence");
  const head = el("tr");
  head.appendChild(el("th"));
  head.appendChild(el("th"));
  for (const column of incidence.columns) {
    const th = el("th", "col-id");
    th.textContent = column;
    head.appendChild(th);
  }
  table.appendChild(head);
  const markSet = new Set(incidence.marks.map((m) => `${m.row}:${m.column}`));
  incidence.rows.forEach((term, row) => {
    const tr = el("tr");
    const pick = el("td", "kw-pick");
    const checkbox = el("input") as HTMLInputElement;
    checkbox.type = "checkbox";
    checkbox.dataset["term"] = term;
    pick.appendChild(checkbox);
    tr.appendChild(pick);
    const name = el("td", "kw-term");
    name.textContent = term;
    tr.appendChild(name);
    incidence.columns.forEach((_, column) => {
      const cell = el("td", markSet.has(`${row}:${column}`) ? "mark" : "");
      tr.appendChild(cell);
    });
    table.appendChild(tr);
  });
  keywords.appendChild(table);
  const copy = el("button");
  copy.id = "copy-keywords";
  copy.textContent = "copy keywords to prompt";
  copy.addEventListener("click", () => {
    const chosen = Array.from(
      keywords.querySelectorAll<HTMLInputElement>("input[type=checkbox]:checked"),
    ).map((c) => c.dataset["term"] ?? "");
    const field = byId<HTMLTextAreaElement>("prompt-input");
    field.value = copyKeywords(field.value, chosen);
  });
  keywords.appendChild(copy);
  box.appendChild(keywords);

  const guidance = el("div", "panel");
  guidance.appendChild(Object.assign(el("h3"), { textContent: "Guidance Scale" }));
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", "0 0 360 80");
  svg.classList.add("guidance-svg");
  for (const bar of histogramBars(report.guidance_histogram, 360, 80)) {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(bar.x + 1));
    rect.setAttribute("y", String(bar.y));
    rect.setAttribute("width", String(Math.max(1, bar.width - 2)));
    rect.setAttribute("height", String(bar.height));
    rect.classList.add("hist-bar");
    svg.appendChild(rect);
  }
  guidance.appendChild(svg);
  const range = el("p", "hint");
  range.textContent = `guidance scales ${report.guidance_histogram.lo.toFixed(2)} .. ${report.guidance_histogram.hi.toFixed(2)}`;
  guidance.appendChild(range);
  box.appendChild(guidance);
}

async function exploreSelection() {
  if (!view.sessionId) return toast("create a session first");
  if (view.selection.length === 0) return toast("select images first (click them)");
  const report = await api.selection(view.sessionId, [...view.selection]);
  renderSelectionReport(report);
}

// ---- bootstrap -----------------------------------------------------------

function start() {
  byId<HTMLButtonElement>("create-session").addEventListener("click", () => {
    submitModelInput().catch((err) => {
      reportError(err);
      const button = byId<HTMLButtonElement>("create-session");
      button.disabled = false;
      button.textContent = "generate & retrieve";
    });
  });
  byId<HTMLButtonElement>("run-criterion").addEventListener("click", () => {
    submitCriterion().catch(reportError);
  });
  wireBrowserControls();
  wireHistogramBrush();
  renderCommonPairs().catch(reportError);
}

document.addEventListener("DOMContentLoaded", start);

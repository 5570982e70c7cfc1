// Browser wiring: canvas + toolbox on the left, generated image on the
// right, and a lane editor mode for building correspondence files. All
// scene logic lives in the headless modules; this file only translates
// DOM events into state calls and paints the results.

import { GeneratorClient } from "./api.js";
import { Composer } from "./composer.js";
import type { RenderSurface } from "./composer.js";
import { LaneEditorState } from "./lanes.js";
import type { EntityClassName, PaletteName } from "./schema.js";
import { ENTITY_CLASSES, PALETTE_NAMES } from "./schema.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function ctx2d(target: HTMLCanvasElement): CanvasRenderingContext2D {
  const context = target.getContext("2d");
  if (context === null) throw new Error("2d canvas unavailable");
  return context;
}

const canvas = el<HTMLCanvasElement>("compose-canvas");
const ctx = ctx2d(canvas);
const output = el<HTMLImageElement>("output-image");
const banner = el<HTMLDivElement>("error-banner");
const statusLine = el<HTMLSpanElement>("status-line");
const classSelect = el<HTMLSelectElement>("class-select");
const colorRow = el<HTMLDivElement>("color-row");
const timeInput = el<HTMLInputElement>("time-input");
const seedInput = el<HTMLInputElement>("seed-input");
const modeToggle = el<HTMLButtonElement>("mode-toggle");
const lanePanel = el<HTMLDivElement>("lane-panel");
const composePanel = el<HTMLDivElement>("compose-panel");

// --- composer mode -------------------------------------------------------

const surface: RenderSurface = {
  showImage(image) {
    const url = URL.createObjectURL(image.blob);
    const prev = output.src;
    output.onload = () => {
      if (prev.startsWith("blob:")) URL.revokeObjectURL(prev);
    };
    output.src = url;
    banner.hidden = true;
  },
  showError(message) {
    banner.textContent = `generation failed: ${message}`;
    banner.hidden = false;
  },
  showStatus(status, detail) {
    statusLine.textContent = detail.length > 0 ? `${status} (${detail})` : status;
  },
};

const composer = new Composer(new GeneratorClient(""), surface);

let activeColor: PaletteName = "white";
let drag: { id: number } | null = null;
let drawStart: [number, number] | null = null;

function toNorm(ev: MouseEvent): [number, number] {
  // normalize immediately; nothing downstream sees pixels
  const rect = canvas.getBoundingClientRect();
  return [
    Math.min(1, Math.max(0, (ev.clientX - rect.left) / rect.width)),
    Math.min(1, Math.max(0, (ev.clientY - rect.top) / rect.height)),
  ];
}

function hitBox(p: [number, number]): number | null {
  // topmost box whose extent contains the point
  for (let i = composer.state.boxes.length - 1; i >= 0; i--) {
    const [cx, cy, w, h] = composer.state.boxes[i].bbox;
    if (Math.abs(p[0] - cx) <= w / 2 && Math.abs(p[1] - cy) <= h / 2) {
      return composer.state.boxes[i].id;
    }
  }
  return null;
}

function paintScene(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#666";
  ctx.strokeRect(0, 0, canvas.width, canvas.height);
  for (const box of composer.state.boxes) {
    const [cx, cy, w, h] = box.bbox;
    ctx.strokeStyle = box.color === "black" ? "#444" : box.color;
    ctx.lineWidth = 2;
    ctx.strokeRect(
      (cx - w / 2) * canvas.width,
      (cy - h / 2) * canvas.height,
      w * canvas.width,
      h * canvas.height,
    );
    ctx.fillStyle = ctx.strokeStyle;
    ctx.font = "11px sans-serif";
    ctx.fillText(box.className, (cx - w / 2) * canvas.width + 2, (cy - h / 2) * canvas.height - 3);
  }
}

canvas.addEventListener("mousedown", (ev) => {
  const p = toNorm(ev);
  const hit = hitBox(p);
  if (hit !== null) drag = { id: hit };
  else drawStart = p;
});

canvas.addEventListener("mousemove", (ev) => {
  if (drag === null) return;
  const p = toNorm(ev);
  composer.moveBox(drag.id, p[0], p[1]);
  paintScene();
});

canvas.addEventListener("mouseup", (ev) => {
  const p = toNorm(ev);
  if (drag !== null) {
    drag = null;
    return;
  }
  if (drawStart === null) return;
  const w = Math.abs(p[0] - drawStart[0]);
  const h = Math.abs(p[1] - drawStart[1]);
  if (w > 0.005 && h > 0.005) {
    composer.drawBox(
      classSelect.value as EntityClassName,
      [(p[0] + drawStart[0]) / 2, (p[1] + drawStart[1]) / 2, w, h],
      activeColor,
    );
    paintScene();
  }
  drawStart = null;
});

canvas.addEventListener("dblclick", (ev) => {
  const hit = hitBox(toNorm(ev));
  if (hit !== null) {
    composer.deleteBox(hit);
    paintScene();
  }
});

for (const cls of ENTITY_CLASSES) {
  const opt = document.createElement("option");
  opt.value = cls;
  opt.textContent = cls;
  classSelect.appendChild(opt);
}
classSelect.value = "car";

for (const name of PALETTE_NAMES) {
  const swatch = document.createElement("button");
  swatch.className = "swatch";
  swatch.style.background = name;
  swatch.title = name;
  swatch.addEventListener("click", () => {
    activeColor = name;
    for (const other of Array.from(colorRow.children)) other.classList.remove("active");
    swatch.classList.add("active");
  });
  colorRow.appendChild(swatch);
}

timeInput.value = composer.state.timeOfDay;
timeInput.addEventListener("change", () => {
  try {
    composer.setTime(timeInput.value);
    banner.hidden = true;
  } catch (err) {
    surface.showError(err instanceof Error ? err.message : String(err));
  }
});

seedInput.value = "0";
seedInput.addEventListener("change", () => {
  composer.setSeed(Number(seedInput.value));
});

// --- lane editor mode ----------------------------------------------------

const laneState = new LaneEditorState();
const laneCanvas = el<HTMLCanvasElement>("lane-canvas");
const laneCtx = ctx2d(laneCanvas);
const laneSelect = el<HTMLSelectElement>("lane-select");
const laneHint = el<HTMLDivElement>("lane-hint");
const exportButton = el<HTMLButtonElement>("export-button");

function refreshLaneUI(): void {
  laneCtx.clearRect(0, 0, laneCanvas.width, laneCanvas.height);
  laneCtx.strokeStyle = "#666";
  laneCtx.strokeRect(0, 0, laneCanvas.width, laneCanvas.height);
  for (const [laneId, draft] of laneState.lanes) {
    laneCtx.fillStyle = laneId === laneState.activeLane ? "#d33" : "#888";
    for (const [x, y] of draft.controlPoints) {
      laneCtx.beginPath();
      laneCtx.arc(x * laneCanvas.width, y * laneCanvas.height, 3, 0, 2 * Math.PI);
      laneCtx.fill();
    }
    const preview = laneState.preview(laneId);
    if (preview !== null) {
      laneCtx.strokeStyle = laneCtx.fillStyle;
      laneCtx.beginPath();
      preview.forEach(([x, y], i) => {
        if (i === 0) laneCtx.moveTo(x * laneCanvas.width, y * laneCanvas.height);
        else laneCtx.lineTo(x * laneCanvas.width, y * laneCanvas.height);
      });
      laneCtx.stroke();
    }
  }
  const problems = laneState.violations();
  exportButton.disabled = problems.length > 0;
  laneHint.textContent = problems.length > 0 ? problems[0] : "ready to export";
}

el<HTMLButtonElement>("add-lane").addEventListener("click", () => {
  const laneId = window.prompt("lane id (e.g. east_0):");
  if (laneId === null || laneId.length === 0) return;
  laneState.addLane(laneId);
  const opt = document.createElement("option");
  opt.value = laneId;
  opt.textContent = laneId;
  laneSelect.appendChild(opt);
  laneSelect.value = laneId;
  refreshLaneUI();
});

laneSelect.addEventListener("change", () => {
  laneState.activeLane = laneSelect.value;
  refreshLaneUI();
});

laneCanvas.addEventListener("click", (ev) => {
  if (laneState.activeLane === null) return;
  const rect = laneCanvas.getBoundingClientRect();
  laneState.addControlPoint(laneState.activeLane, [
    (ev.clientX - rect.left) / rect.width,
    (ev.clientY - rect.top) / rect.height,
  ]);
  refreshLaneUI();
});

el<HTMLButtonElement>("add-waypoint").addEventListener("click", () => {
  if (laneState.activeLane === null) return;
  const offset = Number(el<HTMLInputElement>("wp-offset").value);
  const arc = Number(el<HTMLInputElement>("wp-arc").value);
  try {
    laneState.addWaypoint(laneState.activeLane, offset, arc);
  } catch (err) {
    laneHint.textContent = err instanceof Error ? err.message : String(err);
    return;
  }
  refreshLaneUI();
});

exportButton.addEventListener("click", () => {
  const blob = new Blob([laneState.exportJSON()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "lane_correspondence.json";
  a.click();
  URL.revokeObjectURL(a.href);
});

// --- mode switching ------------------------------------------------------

let laneMode = false;
modeToggle.addEventListener("click", () => {
  laneMode = !laneMode;
  lanePanel.hidden = !laneMode;
  composePanel.hidden = laneMode;
  modeToggle.textContent = laneMode ? "compose mode" : "lane editor mode";
  if (laneMode) refreshLaneUI();
});

paintScene();
void composer.generateNow().catch(() => {
  // initial render failure already went through the error surface
});

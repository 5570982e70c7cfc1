import type {
  EntityClassName,
  PaletteName,
  SceneRequest,
} from "./schema.js";
import { SceneRequestSchema } from "./schema.js";

export interface Box {
  id: number;
  className: EntityClassName;
  /** center-x, center-y, width, height, all normalized to [0, 1] */
  bbox: [number, number, number, number];
  color: PaletteName;
}

export type RequestStatus = "idle" | "waiting" | "generating" | "done" | "error";

const MIN_SIZE = 0.01;

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

function clampBox(
  bbox: [number, number, number, number],
): [number, number, number, number] {
  // schema demands every component in [0,1] and a positive size; the box
  // may hang over the image edge as long as its center stays inside
  return [
    clamp01(bbox[0]),
    clamp01(bbox[1]),
    Math.max(MIN_SIZE, clamp01(bbox[2])),
    Math.max(MIN_SIZE, clamp01(bbox[3])),
  ];
}

/**
 * Editable scene: the single source of truth behind the composer canvas.
 * Every mutator keeps the state serializable to a schema-valid request,
 * so there is no code path that can emit a malformed generate call.
 */
export class ComposerState {
  private nextId = 1;
  boxes: Box[] = [];
  timeOfDay = "12:00";
  seed = 0;
  status: RequestStatus = "idle";
  statusDetail = "";
  lastImage: Blob | null = null;

  addBox(
    className: EntityClassName,
    bbox: [number, number, number, number],
    color: PaletteName = "white",
  ): Box {
    const box: Box = { id: this.nextId++, className, bbox: clampBox(bbox), color };
    this.boxes.push(box);
    return box;
  }

  private find(id: number): Box {
    const box = this.boxes.find((b) => b.id === id);
    if (box === undefined) throw new Error(`no box with id ${id}`);
    return box;
  }

  moveBox(id: number, cx: number, cy: number): void {
    const box = this.find(id);
    box.bbox = clampBox([cx, cy, box.bbox[2], box.bbox[3]]);
  }

  resizeBox(id: number, w: number, h: number): void {
    const box = this.find(id);
    box.bbox = clampBox([box.bbox[0], box.bbox[1], w, h]);
  }

  setColor(id: number, color: PaletteName): void {
    this.find(id).color = color;
  }

  setClass(id: number, className: EntityClassName): void {
    this.find(id).className = className;
  }

  deleteBox(id: number): void {
    this.find(id); // throws on unknown id
    this.boxes = this.boxes.filter((b) => b.id !== id);
  }

  setTime(timeOfDay: string): void {
    if (!/^([01]\d|2[0-3]):([0-5]\d)$/.test(timeOfDay)) {
      throw new Error(`time must be HH:MM (24h), got ${JSON.stringify(timeOfDay)}`);
    }
    this.timeOfDay = timeOfDay;
  }

  setSeed(seed: number): void {
    this.seed = Math.trunc(seed);
  }

  /** Serialize for POST /generate; validated so bugs fail here, not server-side. */
  toRequest(): SceneRequest {
    return SceneRequestSchema.parse({
      version: 1,
      entities: this.boxes.map((b) => ({
        class: b.className,
        bbox: [...b.bbox] as [number, number, number, number],
        color: b.color,
      })),
      time_of_day: this.timeOfDay,
      seed: this.seed,
    });
  }

  /** Rebuild editable state from a serialized request (inverse of toRequest). */
  static fromRequest(request: SceneRequest): ComposerState {
    const parsed = SceneRequestSchema.parse(request);
    const state = new ComposerState();
    if (parsed.time_of_day !== undefined) {
      state.timeOfDay = parsed.time_of_day;
    } else {
      const total = Math.round(parsed.time_seconds ?? 0);
      const h = Math.floor(total / 3600) % 24;
      const m = Math.floor((total % 3600) / 60);
      state.timeOfDay = `${String(h).padStart(2, "0")}:${String(m).padStart(2, "0")}`;
    }
    state.seed = parsed.seed;
    for (const e of parsed.entities) {
      if (typeof e.color !== "string") {
        throw new Error("composer edits palette colors only, got an RGB triple");
      }
      state.addBox(e.class, [...e.bbox] as [number, number, number, number], e.color);
    }
    return state;
  }
}

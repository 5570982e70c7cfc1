import type { GeneratedImage, GeneratorClient } from "./api.js";
import type { Box, RequestStatus } from "./state.js";
import { ComposerState } from "./state.js";
import type { EntityClassName, PaletteName } from "./schema.js";
import { DEBOUNCE_MS, DebouncedGenerator } from "./transport.js";

/** What the composer needs from the page; main.ts backs this with a canvas. */
export interface RenderSurface {
  showImage(image: GeneratedImage): void;
  showError(message: string): void;
  showStatus(status: RequestStatus, detail: string): void;
}

function describe(err: unknown): string {
  if (err instanceof Error) return err.message;
  return String(err);
}

/**
 * The compose-and-generate loop: every scene edit schedules a debounced
 * generate call, the latest response lands in the right pane, and failures
 * show a banner while local edits stay intact.
 */
export class Composer {
  readonly state = new ComposerState();
  private readonly transport: DebouncedGenerator;

  constructor(
    client: GeneratorClient,
    private readonly surface: RenderSurface,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.transport = new DebouncedGenerator(
      client,
      {
        onImage: (image) => {
          this.state.lastImage = image.blob;
          this.setStatus("done", `seed ${image.seed}, ${image.latencyMs.toFixed(0)} ms`);
          this.surface.showImage(image);
        },
        onError: (err) => {
          this.setStatus("error", describe(err));
          this.surface.showError(describe(err));
        },
      },
      debounceMs,
    );
  }

  get inflight(): number {
    return this.transport.inflight;
  }

  private setStatus(status: RequestStatus, detail = ""): void {
    this.state.status = status;
    this.state.statusDetail = detail;
    this.surface.showStatus(status, detail);
  }

  private regenerate(): void {
    this.setStatus("waiting");
    this.transport.schedule(this.state.toRequest());
  }

  drawBox(
    className: EntityClassName,
    bbox: [number, number, number, number],
    color: PaletteName = "white",
  ): Box {
    const box = this.state.addBox(className, bbox, color);
    this.regenerate();
    return box;
  }

  moveBox(id: number, cx: number, cy: number): void {
    this.state.moveBox(id, cx, cy);
    this.regenerate();
  }

  resizeBox(id: number, w: number, h: number): void {
    this.state.resizeBox(id, w, h);
    this.regenerate();
  }

  deleteBox(id: number): void {
    this.state.deleteBox(id);
    this.regenerate();
  }

  setColor(id: number, color: PaletteName): void {
    this.state.setColor(id, color);
    this.regenerate();
  }

  setClass(id: number, className: EntityClassName): void {
    this.state.setClass(id, className);
    this.regenerate();
  }

  setTime(timeOfDay: string): void {
    this.state.setTime(timeOfDay);
    this.regenerate();
  }

  setSeed(seed: number): void {
    this.state.setSeed(seed);
    this.regenerate();
  }

  /** Generate the current (possibly empty) scene without waiting out the debounce. */
  generateNow(): Promise<void> {
    this.setStatus("generating");
    this.transport.schedule(this.state.toRequest());
    return this.transport.flush();
  }

  dispose(): void {
    this.transport.dispose();
  }
}

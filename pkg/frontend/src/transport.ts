import type { GeneratedImage, GeneratorClient } from "./api.js";
import type { SceneRequest } from "./schema.js";

export const DEBOUNCE_MS = 300;

export interface TransportEvents {
  /** Called with the decoded image for the most recent request only. */
  onImage: (image: GeneratedImage, request: SceneRequest) => void;
  /** Called for failures of the most recent request; aborts are silent. */
  onError: (error: unknown) => void;
}

function isAbort(err: unknown): boolean {
  return (
    typeof err === "object" &&
    err !== null &&
    (err as { name?: unknown }).name === "AbortError"
  );
}

/**
 * Serializes generation traffic: every edit schedules a request, but a new
 * edit inside the debounce window replaces the scheduled one, and firing
 * while a request is in flight aborts it. Net effect: at most one request
 * on the wire, and only the response to the latest edit reaches the UI.
 */
export class DebouncedGenerator {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private latest: SceneRequest | null = null;
  private controller: AbortController | null = null;
  private ticket = 0;
  private readonly unsettled = new Set<AbortController>();

  constructor(
    private readonly client: GeneratorClient,
    private readonly events: TransportEvents,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Non-aborted requests currently on the wire (0 or 1). */
  get inflight(): number {
    let n = 0;
    for (const c of this.unsettled) if (!c.signal.aborted) n += 1;
    return n;
  }

  /** True while an edit is waiting out the debounce window. */
  get pending(): boolean {
    return this.timer !== null;
  }

  /** Record the latest scene and (re)arm the debounce timer. */
  schedule(request: SceneRequest): void {
    this.latest = request;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  /** Skip the debounce and send the latest scene now. */
  flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire();
  }

  dispose(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.controller?.abort();
    this.controller = null;
  }

  private async fire(): Promise<void> {
    if (this.latest === null) return;
    const request = this.latest;
    const ticket = ++this.ticket;

    // supersede, never queue: the stale request is torn down first
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;

    this.unsettled.add(controller);
    try {
      const image = await this.client.generate(request, controller.signal);
      if (ticket === this.ticket) this.events.onImage(image, request);
    } catch (err) {
      if (!isAbort(err) && ticket === this.ticket) this.events.onError(err);
    } finally {
      this.unsettled.delete(controller);
      if (this.controller === controller) this.controller = null;
    }
  }
}

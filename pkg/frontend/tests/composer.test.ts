import { describe, expect, it } from "vitest";

import { GeneratorClient } from "../src/api.js";
import type { GeneratedImage } from "../src/api.js";
import { Composer } from "../src/composer.js";
import type { RenderSurface } from "../src/composer.js";
import { SceneRequestSchema } from "../src/schema.js";
import type { SceneRequest } from "../src/schema.js";

const DEBOUNCE = 40; // short window so the scripted loop runs fast

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * In-memory /generate endpoint. Validates every body against the request
 * schema, tracks how many non-aborted requests are open at once, and can
 * hold responses until the test releases them.
 */
function fakeService(opts: { manual?: boolean; status?: number } = {}) {
  const bodies: SceneRequest[] = [];
  const released: Array<() => void> = [];
  let live = 0;
  let maxLive = 0;
  let seq = 0;

  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    expect(String(url)).toBe("/generate");
    const body = SceneRequestSchema.parse(JSON.parse(String(init?.body)));
    bodies.push(body);
    seq += 1;
    const marker = seq;
    live += 1;
    maxLive = Math.max(maxLive, live);
    let open = true;
    const close = () => {
      if (open) {
        open = false;
        live -= 1;
      }
    };
    return await new Promise<Response>((resolve, reject) => {
      init?.signal?.addEventListener("abort", () => {
        close();
        reject(new DOMException("aborted", "AbortError"));
      });
      const respond = () => {
        if (!open) return;
        close();
        if (opts.status !== undefined && opts.status !== 200) {
          resolve(
            new Response(JSON.stringify({ detail: "model not loaded" }), {
              status: opts.status,
              headers: { "Content-Type": "application/json" },
            }),
          );
          return;
        }
        // marker byte makes each fake PNG distinguishable
        resolve(
          new Response(new Uint8Array([0x89, 0x50, 0x4e, 0x47, marker]), {
            status: 200,
            headers: {
              "Content-Type": "image/png",
              "X-Generation-Seed": String(body.seed),
              "X-Generation-Latency-Ms": "1.50",
              "X-Image-Size": "64x64",
            },
          }),
        );
      };
      if (opts.manual) released.push(respond);
      else respond();
    });
  }) as typeof fetch;

  return { fetchFn, bodies, released, maxLive: () => maxLive };
}

function recordingSurface() {
  const images: GeneratedImage[] = [];
  const errors: string[] = [];
  const statuses: string[] = [];
  const surface: RenderSurface = {
    showImage: (img) => images.push(img),
    showError: (msg) => errors.push(msg),
    showStatus: (status) => statuses.push(status),
  };
  return { surface, images, errors, statuses };
}

describe("Composer interaction loop", () => {
  it("draw box, change color, change time: three schema-valid calls, each rendered", async () => {
    const service = fakeService();
    const rec = recordingSurface();
    const composer = new Composer(
      new GeneratorClient("", service.fetchFn),
      rec.surface,
      DEBOUNCE,
    );

    const box = composer.drawBox("car", [0.5, 0.5, 0.2, 0.1], "red");
    await sleep(DEBOUNCE * 3);
    composer.setColor(box.id, "blue");
    await sleep(DEBOUNCE * 3);
    composer.setTime("18:30");
    await sleep(DEBOUNCE * 3);

    // three edits, three calls, every body already validated by the fake
    expect(service.bodies).toHaveLength(3);
    expect(service.bodies[0].entities[0]?.color).toBe("red");
    expect(service.bodies[1].entities[0]?.color).toBe("blue");
    expect(service.bodies[2].time_of_day).toBe("18:30");

    // each response was rendered, in order
    expect(rec.images).toHaveLength(3);
    const markers = await Promise.all(
      rec.images.map(async (img) => new Uint8Array(await img.blob.arrayBuffer())[4]),
    );
    expect(markers).toEqual([1, 2, 3]);
    expect(rec.errors).toEqual([]);
    expect(composer.state.status).toBe("done");
    composer.dispose();
  });

  it("keeps at most one request in flight under rapid edits", async () => {
    const service = fakeService({ manual: true });
    const rec = recordingSurface();
    const composer = new Composer(
      new GeneratorClient("", service.fetchFn),
      rec.surface,
      DEBOUNCE,
    );

    const box = composer.drawBox("car", [0.2, 0.2, 0.1, 0.1], "white");
    await sleep(DEBOUNCE * 3); // request 1 is on the wire, unanswered

    // rapid drag: every move lands inside the debounce window
    for (let i = 1; i <= 10; i++) {
      composer.moveBox(box.id, 0.2 + i * 0.05, 0.2 + i * 0.03);
      await sleep(5);
    }
    await sleep(DEBOUNCE * 3); // the drag settles; request 2 supersedes 1

    for (const respond of service.released) respond();
    await sleep(20);

    expect(service.maxLive()).toBe(1);
    expect(service.bodies).toHaveLength(2);
    const final = service.bodies[1].entities[0];
    expect(final?.bbox[0]).toBeCloseTo(0.7, 9);
    expect(rec.images).toHaveLength(1); // only the final drag position rendered
    expect(rec.errors).toEqual([]);
    composer.dispose();
  });

  it("surfaces service failures inline and preserves edits", async () => {
    const service = fakeService({ status: 503 });
    const rec = recordingSurface();
    const composer = new Composer(
      new GeneratorClient("", service.fetchFn),
      rec.surface,
      DEBOUNCE,
    );

    composer.drawBox("truck", [0.4, 0.6, 0.3, 0.2], "yellow");
    await sleep(DEBOUNCE * 3);

    expect(rec.errors).toHaveLength(1);
    expect(rec.errors[0]).toContain("503");
    expect(composer.state.status).toBe("error");
    expect(composer.state.boxes).toHaveLength(1); // the edit survives the outage
    composer.dispose();
  });

  it("generates an empty scene immediately on request", async () => {
    const service = fakeService();
    const rec = recordingSurface();
    const composer = new Composer(
      new GeneratorClient("", service.fetchFn),
      rec.surface,
      DEBOUNCE,
    );

    await composer.generateNow();
    expect(service.bodies).toHaveLength(1);
    expect(service.bodies[0].entities).toEqual([]);
    expect(rec.images).toHaveLength(1);
    composer.dispose();
  });

  it("deleting a box triggers a regeneration without it", async () => {
    const service = fakeService();
    const rec = recordingSurface();
    const composer = new Composer(
      new GeneratorClient("", service.fetchFn),
      rec.surface,
      DEBOUNCE,
    );

    const box = composer.drawBox("person", [0.5, 0.5, 0.05, 0.1]);
    await sleep(DEBOUNCE * 3);
    composer.deleteBox(box.id);
    await sleep(DEBOUNCE * 3);

    expect(service.bodies).toHaveLength(2);
    expect(service.bodies[1].entities).toEqual([]);
    composer.dispose();
  });
});

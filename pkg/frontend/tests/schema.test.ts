import { describe, expect, it } from "vitest";

import {
  ENTITY_CLASSES,
  PALETTE_NAMES,
  SceneRequestSchema,
  validateRequest,
} from "../src/schema.js";

function base(): Record<string, unknown> {
  return {
    version: 1,
    entities: [{ class: "car", bbox: [0.5, 0.5, 0.2, 0.1], color: "red" }],
    time_of_day: "08:30",
    seed: 7,
  };
}

describe("SceneRequestSchema", () => {
  it("accepts a well-formed request", () => {
    const parsed = validateRequest(base());
    expect(parsed.entities).toHaveLength(1);
    expect(parsed.seed).toBe(7);
  });

  it("accepts every palette name and entity class", () => {
    expect(PALETTE_NAMES).toHaveLength(8);
    for (const color of PALETTE_NAMES) {
      for (const cls of ENTITY_CLASSES) {
        const req = base();
        req.entities = [{ class: cls, bbox: [0.5, 0.5, 0.1, 0.1], color }];
        expect(() => validateRequest(req)).not.toThrow();
      }
    }
  });

  it("accepts an RGB triple color", () => {
    const req = base();
    req.entities = [{ class: "bus", bbox: [0.3, 0.3, 0.2, 0.2], color: [0.9, 0.1, 0.1] }];
    expect(() => validateRequest(req)).not.toThrow();
  });

  it("rejects colors outside the palette", () => {
    const req = base();
    req.entities = [{ class: "car", bbox: [0.5, 0.5, 0.1, 0.1], color: "mauve" }];
    expect(() => validateRequest(req)).toThrow();
  });

  it("rejects unknown entity classes", () => {
    const req = base();
    req.entities = [{ class: "bicycle", bbox: [0.5, 0.5, 0.1, 0.1], color: "red" }];
    expect(() => validateRequest(req)).toThrow();
  });

  it("rejects bbox components outside [0, 1] and non-positive sizes", () => {
    for (const bbox of [
      [1.2, 0.5, 0.1, 0.1],
      [0.5, -0.1, 0.1, 0.1],
      [0.5, 0.5, 0.0, 0.1],
      [0.5, 0.5, 0.1, 0.0],
    ]) {
      const req = base();
      req.entities = [{ class: "car", bbox, color: "red" }];
      expect(() => validateRequest(req), JSON.stringify(bbox)).toThrow();
    }
  });

  it("enforces HH:MM 24h time format", () => {
    for (const bad of ["25:00", "12:60", "7:30", "noon", "12-00"]) {
      const req = base();
      req.time_of_day = bad;
      expect(() => validateRequest(req), bad).toThrow();
    }
    const req = base();
    req.time_of_day = "23:59";
    expect(() => validateRequest(req)).not.toThrow();
  });

  it("requires exactly one of time_of_day and time_seconds", () => {
    const both = base();
    both.time_seconds = 3600;
    expect(() => validateRequest(both)).toThrow();

    const neither = base();
    delete neither.time_of_day;
    expect(() => validateRequest(neither)).toThrow();

    const secondsOnly = base();
    delete secondsOnly.time_of_day;
    secondsOnly.time_seconds = 21600;
    expect(() => validateRequest(secondsOnly)).not.toThrow();
  });

  it("bounds time_seconds to one day", () => {
    const req = base();
    delete req.time_of_day;
    req.time_seconds = 90000;
    expect(() => validateRequest(req)).toThrow();
  });

  it("rejects unknown schema versions", () => {
    const req = base();
    req.version = 2;
    expect(() => validateRequest(req)).toThrow();
  });

  it("rejects non-integer seeds", () => {
    const req = base();
    req.seed = 1.5;
    expect(() => validateRequest(req)).toThrow();
  });

  it("accepts the two known variants and nothing else", () => {
    for (const variant of ["cluster", "discrete"]) {
      const req = base();
      req.variant = variant;
      expect(() => validateRequest(req)).not.toThrow();
    }
    const req = base();
    req.variant = "hybrid";
    expect(() => validateRequest(req)).toThrow();
  });

  it("allows an empty scene", () => {
    const req = base();
    req.entities = [];
    expect(() => SceneRequestSchema.parse(req)).not.toThrow();
  });
});

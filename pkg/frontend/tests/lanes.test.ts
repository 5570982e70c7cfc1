import { describe, expect, it } from "vitest";

import { LaneEditorState } from "../src/lanes.js";
import type { Point } from "../src/spline.js";

const FOUR_POINTS: Point[] = [
  [0.1, 0.5],
  [0.35, 0.52],
  [0.6, 0.48],
  [0.9, 0.5],
];

function laneWithPoints(id = "east_0"): LaneEditorState {
  const state = new LaneEditorState();
  state.addLane(id);
  for (const p of FOUR_POINTS) state.addControlPoint(id, p);
  return state;
}

describe("LaneEditorState", () => {
  it("manages lanes by id and rejects duplicates", () => {
    const state = new LaneEditorState();
    state.addLane("a");
    expect(state.activeLane).toBe("a");
    expect(() => state.addLane("a")).toThrow(/already exists/);
    expect(() => state.addLane("")).toThrow(/non-empty/);
    state.removeLane("a");
    expect(state.activeLane).toBeNull();
    expect(() => state.removeLane("a")).toThrow(/unknown lane/);
  });

  it("clamps clicked control points and rejects exact duplicates", () => {
    const state = new LaneEditorState();
    state.addLane("a");
    state.addControlPoint("a", [1.5, -0.2]);
    expect(state.lanes.get("a")!.controlPoints[0]).toEqual([1, 0]);
    expect(() => state.addControlPoint("a", [1, 0])).toThrow(/duplicate/);
  });

  it("has no preview until 4 points exist, then passes through endpoints", () => {
    const state = new LaneEditorState();
    state.addLane("a");
    for (const p of FOUR_POINTS.slice(0, 3)) state.addControlPoint("a", p);
    expect(state.preview("a")).toBeNull();
    state.addControlPoint("a", FOUR_POINTS[3]);
    const preview = state.preview("a")!;
    expect(preview[0][0]).toBeCloseTo(FOUR_POINTS[0][0], 9);
    expect(preview[preview.length - 1][1]).toBeCloseTo(FOUR_POINTS[3][1], 9);
  });

  it("flags missing control points and waypoints as export blockers", () => {
    const state = new LaneEditorState();
    state.addLane("a");
    state.addControlPoint("a", [0.1, 0.1]);
    const problems = state.violations();
    expect(problems.some((p) => p.includes("at least 4"))).toBe(true);
    expect(problems.some((p) => p.includes("2 waypoint"))).toBe(true);
    expect(state.canExport()).toBe(false);
    expect(() => state.exportJSON()).toThrow(/cannot export/);
  });

  it("validates waypoint arclength range at entry", () => {
    const state = laneWithPoints();
    expect(() => state.addWaypoint("east_0", 0, 1.2)).toThrow(/\[0, 1\]/);
  });

  it("flags non-monotone waypoint pairs in either field", () => {
    const state = laneWithPoints();
    state.addWaypoint("east_0", 0, 0.1);
    state.addWaypoint("east_0", 10, 0.05); // arclength goes backwards
    expect(state.violations().some((p) => p.includes("strictly"))).toBe(true);

    const state2 = laneWithPoints();
    state2.addWaypoint("east_0", 10, 0.1);
    state2.addWaypoint("east_0", 5, 0.5); // offset goes backwards
    expect(state2.violations().some((p) => p.includes("strictly"))).toBe(true);
  });

  it("re-validates after deleting a waypoint", () => {
    const state = laneWithPoints();
    state.addWaypoint("east_0", 0, 0.1);
    state.addWaypoint("east_0", 20, 0.05);
    state.addWaypoint("east_0", 40, 0.9);
    expect(state.canExport()).toBe(false);

    state.removeWaypoint("east_0", 1); // drop the offending pair
    expect(state.violations()).toEqual([]);
    expect(state.canExport()).toBe(true);

    state.removeWaypoint("east_0", 1); // now only one pair is left
    expect(state.violations().some((p) => p.includes("2 waypoint"))).toBe(true);
    expect(() => state.removeWaypoint("east_0", 5)).toThrow(/no waypoint/);
  });

  it("exports the correspondence JSON shape the converter reads", () => {
    const state = laneWithPoints("north_1");
    state.addWaypoint("north_1", 0, 0.0);
    state.addWaypoint("north_1", 50, 0.5);
    state.addWaypoint("north_1", 100, 1.0);

    const parsed = JSON.parse(state.exportJSON());
    expect(Object.keys(parsed)).toEqual(["lanes"]);
    expect(Object.keys(parsed.lanes)).toEqual(["north_1"]);
    expect(parsed.lanes.north_1.control_points).toEqual(
      FOUR_POINTS.map((p) => [p[0], p[1]]),
    );
    expect(parsed.lanes.north_1.waypoints).toEqual([
      { sim_offset: 0, image_arclength: 0 },
      { sim_offset: 50, image_arclength: 0.5 },
      { sim_offset: 100, image_arclength: 1 },
    ]);
  });

  it("undoControlPoint drops the most recent click", () => {
    const state = laneWithPoints();
    state.undoControlPoint("east_0");
    expect(state.lanes.get("east_0")!.controlPoints).toHaveLength(3);
    expect(state.preview("east_0")).toBeNull();
  });
});

import type { Point } from "./spline.js";
import { LaneSpline } from "./spline.js";

export interface Waypoint {
  /** meters along the simulator lane */
  sim_offset: number;
  /** fraction of spline arclength in [0, 1] */
  image_arclength: number;
}

export interface LaneDraft {
  controlPoints: Point[];
  waypoints: Waypoint[];
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

/**
 * Lane editor model: click-to-place spline control points over a junction
 * image, plus typed (simulator offset, arclength fraction) waypoint pairs.
 * Export produces the correspondence JSON the converter CLI consumes.
 */
export class LaneEditorState {
  backgroundUrl: string | null = null;
  readonly lanes = new Map<string, LaneDraft>();
  activeLane: string | null = null;

  addLane(laneId: string): void {
    if (laneId.length === 0) throw new Error("lane id must be non-empty");
    if (this.lanes.has(laneId)) throw new Error(`lane ${JSON.stringify(laneId)} already exists`);
    this.lanes.set(laneId, { controlPoints: [], waypoints: [] });
    this.activeLane = laneId;
  }

  removeLane(laneId: string): void {
    if (!this.lanes.delete(laneId)) {
      throw new Error(`unknown lane ${JSON.stringify(laneId)}`);
    }
    if (this.activeLane === laneId) this.activeLane = null;
  }

  private draft(laneId: string): LaneDraft {
    const draft = this.lanes.get(laneId);
    if (draft === undefined) throw new Error(`unknown lane ${JSON.stringify(laneId)}`);
    return draft;
  }

  /** Place a control point (canvas clicks arrive already normalized). */
  addControlPoint(laneId: string, point: Point): void {
    const draft = this.draft(laneId);
    const p: Point = [clamp01(point[0]), clamp01(point[1])];
    if (draft.controlPoints.some((q) => q[0] === p[0] && q[1] === p[1])) {
      throw new Error("duplicate control point");
    }
    draft.controlPoints.push(p);
  }

  undoControlPoint(laneId: string): void {
    this.draft(laneId).controlPoints.pop();
  }

  /** Live preview polyline, or null until the spline is determined. */
  preview(laneId: string, samples = 64): Point[] | null {
    const draft = this.draft(laneId);
    if (draft.controlPoints.length < 4) return null;
    return new LaneSpline(draft.controlPoints).samples(samples);
  }

  addWaypoint(laneId: string, simOffset: number, imageArclength: number): void {
    if (imageArclength < 0 || imageArclength > 1) {
      throw new Error(`image_arclength must lie in [0, 1], got ${imageArclength}`);
    }
    this.draft(laneId).waypoints.push({
      sim_offset: simOffset,
      image_arclength: imageArclength,
    });
  }

  removeWaypoint(laneId: string, index: number): void {
    const draft = this.draft(laneId);
    if (index < 0 || index >= draft.waypoints.length) {
      throw new Error(`no waypoint at index ${index}`);
    }
    draft.waypoints.splice(index, 1);
  }

  /**
   * Everything blocking export, as user-facing strings. The converter
   * rejects lanes with < 4 distinct control points, < 2 waypoint pairs,
   * or pairs not strictly increasing in both fields, so we flag the same
   * conditions here. Recomputed from scratch, so deletions re-validate.
   */
  violations(): string[] {
    const problems: string[] = [];
    if (this.lanes.size === 0) problems.push("no lanes defined");
    for (const [laneId, draft] of this.lanes) {
      if (draft.controlPoints.length < 4) {
        problems.push(
          `lane "${laneId}" has ${draft.controlPoints.length} control points; ` +
            "click at least 4 to define the spline",
        );
      }
      if (draft.waypoints.length < 2) {
        problems.push(`lane "${laneId}" needs at least 2 waypoint pairs`);
      }
      for (let i = 1; i < draft.waypoints.length; i++) {
        const a = draft.waypoints[i - 1];
        const b = draft.waypoints[i];
        if (b.sim_offset <= a.sim_offset || b.image_arclength <= a.image_arclength) {
          problems.push(
            `lane "${laneId}" waypoints ${i - 1} and ${i} are not strictly ` +
              "increasing in both sim_offset and image_arclength",
          );
        }
      }
    }
    return problems;
  }

  canExport(): boolean {
    return this.violations().length === 0;
  }

  /** Correspondence JSON in the exact shape the converter loads. */
  exportJSON(): string {
    const problems = this.violations();
    if (problems.length > 0) {
      throw new Error(`cannot export: ${problems.join("; ")}`);
    }
    const lanes: Record<
      string,
      { control_points: number[][]; waypoints: Waypoint[] }
    > = {};
    for (const [laneId, draft] of this.lanes) {
      lanes[laneId] = {
        control_points: draft.controlPoints.map((p) => [p[0], p[1]]),
        waypoints: draft.waypoints.map((w) => ({ ...w })),
      };
    }
    return JSON.stringify({ lanes }, null, 2);
  }
}

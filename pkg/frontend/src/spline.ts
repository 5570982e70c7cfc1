// Natural cubic splines through 2-D control points, chord-length
// parameterized. Mirrors the lane geometry used by the image service's
// simulator bridge so previews in the editor match what the converter
// will reconstruct from the exported control points.

export type Point = [number, number];

const ARC_SAMPLES_PER_SEGMENT = 128;
const MIN_ARC_SAMPLES = 512;

/**
 * Piecewise-linear interpolation with end clamping: x below xs[0] maps to
 * ys[0], above xs[n-1] to ys[n-1]. xs must be non-decreasing.
 */
export function interp(x: number, xs: number[], ys: number[]): number {
  const n = xs.length;
  if (n === 0 || n !== ys.length) {
    throw new Error("interp needs matching non-empty tables");
  }
  if (x <= xs[0]) return ys[0];
  if (x >= xs[n - 1]) return ys[n - 1];
  // binary search for the segment containing x
  let lo = 0;
  let hi = n - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (xs[mid] <= x) lo = mid;
    else hi = mid;
  }
  const span = xs[hi] - xs[lo];
  if (span === 0) return ys[lo];
  const w = (x - xs[lo]) / span;
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

/**
 * One-dimensional natural cubic spline: second derivative zero at both ends.
 * Solves the standard tridiagonal system for the knot second derivatives,
 * then evaluates segment polynomials in the shifted variable dt = t - t_i:
 *
 *   S_i(dt) = y_i + b_i dt + (m_i / 2) dt^2 + ((m_{i+1} - m_i) / 6 h_i) dt^3
 *   b_i = (y_{i+1} - y_i) / h_i - h_i (2 m_i + m_{i+1}) / 6
 */
class NaturalSpline1D {
  private readonly ts: number[];
  private readonly ys: number[];
  private readonly m: number[]; // second derivatives at knots

  constructor(ts: number[], ys: number[]) {
    const n = ts.length;
    this.ts = ts;
    this.ys = ys;
    this.m = new Array<number>(n).fill(0);
    if (n < 3) return; // with 2 knots the natural spline is the chord

    // Thomas algorithm on the interior equations:
    //   h_{i-1} m_{i-1} + 2 (h_{i-1} + h_i) m_i + h_i m_{i+1} = rhs_i
    const h = new Array<number>(n - 1);
    for (let i = 0; i < n - 1; i++) h[i] = ts[i + 1] - ts[i];
    const diag = new Array<number>(n - 2);
    const rhs = new Array<number>(n - 2);
    for (let i = 1; i < n - 1; i++) {
      diag[i - 1] = 2 * (h[i - 1] + h[i]);
      rhs[i - 1] =
        6 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    for (let i = 1; i < n - 2; i++) {
      const w = h[i] / diag[i - 1];
      diag[i] -= w * h[i];
      rhs[i] -= w * rhs[i - 1];
    }
    for (let i = n - 3; i >= 0; i--) {
      const upper = i < n - 3 ? h[i + 1] * this.m[i + 2] : 0;
      this.m[i + 1] = (rhs[i] - upper) / diag[i];
    }
  }

  private segment(t: number): number {
    const ts = this.ts;
    let lo = 0;
    let hi = ts.length - 1;
    if (t <= ts[0]) return 0;
    if (t >= ts[hi]) return hi - 1;
    while (hi - lo > 1) {
      const mid = (lo + hi) >> 1;
      if (ts[mid] <= t) lo = mid;
      else hi = mid;
    }
    return lo;
  }

  at(t: number): number {
    const i = this.segment(t);
    const h = this.ts[i + 1] - this.ts[i];
    const dt = t - this.ts[i];
    const b =
      (this.ys[i + 1] - this.ys[i]) / h - (h * (2 * this.m[i] + this.m[i + 1])) / 6;
    const c = this.m[i] / 2;
    const d = (this.m[i + 1] - this.m[i]) / (6 * h);
    return this.ys[i] + dt * (b + dt * (c + dt * d));
  }

  derivativeAt(t: number): number {
    const i = this.segment(t);
    const h = this.ts[i + 1] - this.ts[i];
    const dt = t - this.ts[i];
    const b =
      (this.ys[i + 1] - this.ys[i]) / h - (h * (2 * this.m[i] + this.m[i + 1])) / 6;
    const c = this.m[i] / 2;
    const d = (this.m[i + 1] - this.m[i]) / (6 * h);
    return b + dt * (2 * c + 3 * d * dt);
  }
}

/** 2-D lane spline with an arclength lookup table. */
export class LaneSpline {
  readonly controlPoints: Point[];
  private readonly knots: number[];
  private readonly sx: NaturalSpline1D;
  private readonly sy: NaturalSpline1D;
  private readonly arcParams: number[];
  private readonly arcLengths: number[];

  constructor(points: Point[]) {
    if (points.length < 4) {
      throw new Error(`need at least 4 control points, got ${points.length}`);
    }
    const seen = new Set(points.map((p) => `${p[0]},${p[1]}`));
    if (seen.size !== points.length) {
      throw new Error("duplicate control points");
    }
    this.controlPoints = points.map((p) => [p[0], p[1]]);

    // chord-length parameterization
    this.knots = [0];
    for (let i = 1; i < points.length; i++) {
      const dx = points[i][0] - points[i - 1][0];
      const dy = points[i][1] - points[i - 1][1];
      this.knots.push(this.knots[i - 1] + Math.hypot(dx, dy));
    }
    this.sx = new NaturalSpline1D(this.knots, points.map((p) => p[0]));
    this.sy = new NaturalSpline1D(this.knots, points.map((p) => p[1]));

    // cumulative trapezoid of speed over a dense parameter grid
    const segs = Math.max(MIN_ARC_SAMPLES, ARC_SAMPLES_PER_SEGMENT * (points.length - 1));
    const tEnd = this.knots[this.knots.length - 1];
    this.arcParams = new Array<number>(segs + 1);
    this.arcLengths = new Array<number>(segs + 1);
    let prevSpeed = Math.hypot(this.sx.derivativeAt(0), this.sy.derivativeAt(0));
    this.arcParams[0] = 0;
    this.arcLengths[0] = 0;
    for (let i = 1; i <= segs; i++) {
      const t = (tEnd * i) / segs;
      const speed = Math.hypot(this.sx.derivativeAt(t), this.sy.derivativeAt(t));
      this.arcParams[i] = t;
      this.arcLengths[i] =
        this.arcLengths[i - 1] + ((speed + prevSpeed) / 2) * (t - this.arcParams[i - 1]);
      prevSpeed = speed;
    }
  }

  get totalLength(): number {
    return this.arcLengths[this.arcLengths.length - 1];
  }

  pointAtParam(t: number): Point {
    return [this.sx.at(t), this.sy.at(t)];
  }

  /** Evaluate at normalized arclength u in [0, 1]; clamps outside. */
  pointAtFraction(u: number): Point {
    const s = u * this.totalLength;
    const t = interp(s, this.arcLengths, this.arcParams);
    return this.pointAtParam(t);
  }

  /** Evenly spaced samples along the parameter, for drawing previews. */
  samples(count = 64): Point[] {
    const tEnd = this.knots[this.knots.length - 1];
    const out: Point[] = [];
    for (let i = 0; i <= count; i++) {
      out.push(this.pointAtParam((tEnd * i) / count));
    }
    return out;
  }
}

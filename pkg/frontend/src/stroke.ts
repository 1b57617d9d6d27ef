// Pointer strokes -> demonstration points. Raw pointer samples arrive with
// noisy timing, so the stroke is resampled to constant arc-speed before
// differencing; controls are finite differences clamped to the control box.

import type { DemoPointMsg } from "./types";

export interface Pt {
  x: number;
  y: number;
}

export interface StrokeOptions {
  dt: number; // seconds per sample after resampling
  speed: number; // arc speed the resampled demo moves at (units/s)
  controlBound: number; // per-axis |u| limit
  minPoints?: number; // strokes shorter than this are rejected (default 2)
}

export function strokeLength(points: Pt[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    total += Math.hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
  }
  return total;
}

/** Resample a polyline at constant spacing along its arc length. */
export function resampleArcLength(points: Pt[], spacing: number): Pt[] {
  if (points.length === 0 || spacing <= 0) return [];
  const out: Pt[] = [{ ...points[0] }];
  let carry = 0; // distance already covered toward the next sample
  for (let i = 1; i < points.length; i++) {
    let ax = points[i - 1].x;
    let ay = points[i - 1].y;
    const bx = points[i].x;
    const by = points[i].y;
    let seg = Math.hypot(bx - ax, by - ay);
    while (carry + seg >= spacing) {
      const need = spacing - carry;
      const t = need / seg;
      ax = ax + (bx - ax) * t;
      ay = ay + (by - ay) * t;
      out.push({ x: ax, y: ay });
      seg -= need;
      carry = 0;
    }
    carry += seg;
  }
  return out;
}

/**
 * Convert a drawn stroke into (x, u, t) demonstration points.
 *
 * Controls are forward differences u_k = (x_{k+1} - x_k) / dt, clamped to the
 * box, with u = 0 at the final point. Returns null for clicks and degenerate
 * strokes (no usable upload).
 */
export function strokeToDemoPoints(
  raw: Pt[],
  opts: StrokeOptions,
): DemoPointMsg[] | null {
  const minPoints = opts.minPoints ?? 2;
  const spacing = opts.speed * opts.dt;
  const pts = resampleArcLength(raw, spacing);
  if (pts.length < minPoints) return null;
  const clamp = (v: number) =>
    Math.min(opts.controlBound, Math.max(-opts.controlBound, v));
  const out: DemoPointMsg[] = [];
  for (let k = 0; k < pts.length; k++) {
    let ux = 0;
    let uy = 0;
    if (k < pts.length - 1) {
      ux = clamp((pts[k + 1].x - pts[k].x) / opts.dt);
      uy = clamp((pts[k + 1].y - pts[k].y) / opts.dt);
    }
    out.push({ x: [pts[k].x, pts[k].y], u: [ux, uy], t: k });
  }
  return out;
}

/** Clip stroke points to the workspace box; reports whether any were moved. */
export function clipStroke(
  raw: Pt[],
  bounds: { xmin: number; ymin: number; xmax: number; ymax: number },
): { points: Pt[]; clipped: boolean } {
  let clipped = false;
  const points = raw.map((p) => {
    const x = Math.min(bounds.xmax, Math.max(bounds.xmin, p.x));
    const y = Math.min(bounds.ymax, Math.max(bounds.ymin, p.y));
    if (x !== p.x || y !== p.y) clipped = true;
    return { x, y };
  });
  return { points, clipped };
}

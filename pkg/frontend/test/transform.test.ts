import { describe, expect, it } from "vitest";

import { CanvasTransform } from "../src/transform";

const tf = new CanvasTransform({ xmin: 0, ymin: 0, xmax: 1, ymax: 1 }, 640, 640);

describe("CanvasTransform", () => {
  it("maps workspace corners to canvas corners with y flipped", () => {
    expect(tf.toCanvas(0, 0)).toEqual([0, 640]);
    expect(tf.toCanvas(1, 1)).toEqual([640, 0]);
    expect(tf.toCanvas(0.5, 0.5)).toEqual([320, 320]);
  });

  it("toWorkspace inverts toCanvas exactly", () => {
    for (const [x, y] of [
      [0.1, 0.9],
      [0.5, 0.4],
      [0.987, 0.003],
    ]) {
      const [px, py] = tf.toCanvas(x, y);
      const [bx, by] = tf.toWorkspace(px, py);
      expect(bx).toBeCloseTo(x, 12);
      expect(by).toBeCloseTo(y, 12);
    }
  });

  it("toCanvas inverts toWorkspace exactly", () => {
    for (const [px, py] of [
      [0, 0],
      [640, 640],
      [123.5, 71.25],
    ]) {
      const [x, y] = tf.toWorkspace(px, py);
      const [bx, by] = tf.toCanvas(x, y);
      expect(bx).toBeCloseTo(px, 9);
      expect(by).toBeCloseTo(py, 9);
    }
  });

  it("handles non-square bounds", () => {
    const wide = new CanvasTransform({ xmin: -2, ymin: 0, xmax: 2, ymax: 1 }, 400, 100);
    expect(wide.toCanvas(-2, 0)).toEqual([0, 100]);
    expect(wide.toCanvas(2, 1)).toEqual([400, 0]);
    const [x, y] = wide.toWorkspace(...wide.toCanvas(1.25, 0.75));
    expect(x).toBeCloseTo(1.25, 12);
    expect(y).toBeCloseTo(0.75, 12);
  });

  it("scales radii in x-axis units", () => {
    expect(tf.scaleX(0.1)).toBeCloseTo(64, 12);
  });

  it("clamps points to the workspace", () => {
    expect(tf.clampToWorkspace(-0.5, 1.7)).toEqual([0, 1]);
    expect(tf.inWorkspace(0.5, 0.5)).toBe(true);
    expect(tf.inWorkspace(1.2, 0.5)).toBe(false);
  });
});
